// End-to-end review round trip: the real console DOM driven against the
// real HTTP service. The fixture server holds a 2-rival contested pair
// plus one active fact flagged as a high-traffic change.
import { ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { setApiBase } from "../src/api";
import { initConsole } from "../src/main";

let server: ChildProcess;
let base = "";

async function waitFor(cond: () => boolean, ms = 8000): Promise<void> {
  const t0 = Date.now();
  while (!cond()) {
    if (Date.now() - t0 > ms) throw new Error("timed out waiting for condition");
    await new Promise((r) => setTimeout(r, 40));
  }
}

beforeAll(async () => {
  const script = join(dirname(fileURLToPath(import.meta.url)), "fixture_server.py");
  server = spawn("python3", [script], { stdio: ["ignore", "pipe", "inherit"] });
  const port: number = await new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("fixture server never printed its port")), 15000);
    server.stdout!.on("data", (chunk: Buffer) => {
      const m = /PORT=(\d+)/.exec(chunk.toString());
      if (m) {
        clearTimeout(timer);
        resolve(Number(m[1]));
      }
    });
    server.on("exit", (code) => reject(new Error(`fixture server exited early (${code})`)));
  });
  base = `http://127.0.0.1:${port}`;
  setApiBase(base);
  for (let i = 0; i < 100; i++) {
    try {
      const r = await fetch(`${base}/api/health`);
      if (r.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("fixture server never became healthy");
}, 30000);

afterAll(() => {
  server?.kill();
});

function mount(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  initConsole(document);
  return document.getElementById("app")!;
}

function cards(app: HTMLElement): HTMLElement[] {
  return Array.from(app.querySelectorAll<HTMLElement>(".card"));
}

function cardByValue(app: HTMLElement, value: string): HTMLElement {
  const card = cards(app).find((c) =>
    c.querySelector(".fact-line")!.textContent!.includes(value),
  );
  if (!card) throw new Error(`no queue card for ${value}`);
  return card;
}

async function runQuery(app: HTMLElement, text: string, at: string, view: string): Promise<string> {
  const form = app.querySelector<HTMLFormElement>("form.whatif")!;
  form.querySelector<HTMLInputElement>('input[name="text"]')!.value = text;
  form.querySelector<HTMLInputElement>('input[name="at"]')!.value = at;
  form.querySelector<HTMLSelectElement>('select[name="view"]')!.value = view;
  const out = app.querySelector<HTMLElement>(".query-out")!;
  out.innerHTML = "";
  form.requestSubmit();
  await waitFor(() => out.innerHTML !== "");
  return out.textContent ?? "";
}

describe("review console round trip", () => {
  it("renders the queue and shows disputes only under the wider view", async () => {
    const app = mount();
    await waitFor(() => cards(app).length === 3);

    const badges = cards(app).map((c) => c.querySelector(".badge")!.textContent);
    expect(badges.filter((b) => b === "contested")).toHaveLength(2);
    expect(badges.filter((b) => b === "high_traffic_change")).toHaveLength(1);

    // both rivals of the pair are hidden from the default view
    const activeText = await runQuery(app, "where is vexline ltd headquartered", "2021-06-01", "active");
    expect(activeText).not.toContain("Lisbon");
    expect(activeText).not.toContain("Porto");

    const widerText = await runQuery(
      app,
      "where is vexline ltd headquartered",
      "2021-06-01",
      "active_plus_contested",
    );
    expect(widerText).toContain("Disputed (sources disagree):");
    expect(widerText).toContain("Lisbon");
    expect(widerText).toContain("Porto");
  });

  it("requires a note before a deprecation leaves the browser", async () => {
    const app = mount();
    await waitFor(() => cards(app).length === 3);
    const card = cardByValue(app, "lisbon");
    const spy = vi.spyOn(globalThis, "fetch");
    card.querySelector<HTMLSelectElement>('select[name="action"]')!.value = "deprecate";
    card.querySelector<HTMLFormElement>("form.decision")!.requestSubmit();
    expect(card.querySelector(".form-error")!.textContent).toContain("note is required");
    expect(spy.mock.calls.filter(([u]) => String(u).includes("/decision"))).toHaveLength(0);
    spy.mockRestore();
  });

  it("resolving the pair makes the winner, and only the winner, retrievable", async () => {
    const app = mount();
    await waitFor(() => cards(app).length === 3);

    const loser = cardByValue(app, "lisbon");
    const winnerSel = loser.querySelector<HTMLSelectElement>('select[name="winner"]')!;
    const porto = Array.from(winnerSel.options).find((o) => o.textContent === "porto")!;
    const actionSel = loser.querySelector<HTMLSelectElement>('select[name="action"]')!;
    actionSel.value = "resolve_to";
    actionSel.dispatchEvent(new Event("change"));
    expect(winnerSel.classList.contains("hidden")).toBe(false);
    winnerSel.value = porto.value;
    loser.querySelector<HTMLInputElement>('input[name="note"]')!.value = "wire-2 is the primary source";

    const spy = vi.spyOn(globalThis, "fetch");
    const form = loser.querySelector<HTMLFormElement>("form.decision")!;
    form.requestSubmit();
    form.requestSubmit(); // double submit must not produce a second POST
    await waitFor(() => cards(app).length === 1);
    expect(spy.mock.calls.filter(([u]) => String(u).includes("/decision"))).toHaveLength(1);
    spy.mockRestore();

    // the whole contested group resolved; only the hot-change card remains
    expect(cards(app)[0].querySelector(".badge")!.textContent).toBe("high_traffic_change");

    const text = await runQuery(app, "where is vexline ltd headquartered", "2021-06-01", "active");
    expect(text).toContain("Porto");
    expect(text).not.toContain("Lisbon");
  });

  it("deprecating the hot-change fact removes it from active retrieval", async () => {
    const app = mount();
    await waitFor(() => cards(app).length === 1);

    const before = await runQuery(app, "where is orno mills headquartered", "2021-06-01", "active");
    expect(before).toContain("Braga");

    const card = cardByValue(app, "braga");
    card.querySelector<HTMLSelectElement>('select[name="action"]')!.value = "deprecate";
    card.querySelector<HTMLInputElement>('input[name="note"]')!.value = "seat reverted, filing withdrawn";
    card.querySelector<HTMLFormElement>("form.decision")!.requestSubmit();
    await waitFor(() => app.querySelector(".queue .empty") !== null);
    expect(app.querySelector(".queue .empty")!.textContent).toContain("no items");

    // other live facts may still match the query; the deprecated one must not
    const after = await runQuery(app, "where is orno mills headquartered", "2021-06-01", "active");
    expect(after).not.toContain("Braga");
  });
});
