import {
  QueueItem,
  RecordDict,
  fetchQueue,
  postDecision,
} from "./api";

export const ACTIONS = ["confirm_active", "deprecate", "mark_preferred", "resolve_to"];
const NOTE_REQUIRED = new Set(["deprecate", "resolve_to"]);

function esc(s: string): string {
  const div = document.createElement("div");
  div.textContent = s;
  return div.innerHTML;
}

function interval(rec: RecordDict): string {
  const v = rec.validity;
  const end = v.t_end ?? "open";
  const flags = [
    v.start_inferred ? "start inferred" : "",
    v.end_inferred ? "end inferred" : "",
  ].filter(Boolean);
  return `${v.t_start} .. ${end}` + (flags.length ? ` (${flags.join(", ")})` : "");
}

function rivalLine(r: RecordDict): string {
  return `
    <div class="rival">
      <span class="chip chip-${esc(r.epistemic.status.toLowerCase())}">${esc(r.epistemic.status)}</span>
      <span class="rival-value">${esc(r.fact.object_norm)}</span>
      <span class="muted">${esc(interval(r))} &middot; ${r.provenance.evidence.length} source(s)</span>
    </div>`;
}

function evidenceRows(rec: RecordDict): string {
  return rec.provenance.evidence
    .map(
      (ev) => `
      <li class="muted">
        ${esc(ev.doc_id)} [${ev.span_start}:${ev.span_end}] at ${esc(ev.doc_time)}
      </li>`,
    )
    .join("");
}

function cardHtml(entry: QueueItem): string {
  const rec = entry.record;
  const reason = entry.item.reason;
  const winnerOptions = entry.rivals
    .map((r) => `<option value="${esc(r.id)}">${esc(r.fact.object_norm)}</option>`)
    .join("");
  return `
    <article class="card" data-nugget="${esc(rec.id)}">
      <header>
        <span class="badge badge-${esc(reason)}">${esc(reason)}</span>
        <span class="chip chip-${esc(rec.epistemic.status.toLowerCase())}">${esc(rec.epistemic.status)}</span>
        <span class="muted">queued ${esc(entry.item.queued_at)}</span>
      </header>
      <p class="fact-line">
        <strong>${esc(rec.fact.subject_norm)}</strong>
        ${esc(rec.fact.predicate)}
        <strong>${esc(rec.fact.object_norm)}</strong>
      </p>
      <p class="excerpt">&ldquo;${esc(rec.text)}&rdquo;</p>
      <p class="muted">valid ${esc(interval(rec))}</p>
      <ul class="evidence">${evidenceRows(rec)}</ul>
      <div class="rivals">
        ${entry.rivals.length ? entry.rivals.map(rivalLine).join("") : '<p class="muted">no rivals for this key</p>'}
      </div>
      <form class="decision">
        <select name="action">
          ${ACTIONS.map((a) => `<option value="${a}">${a}</option>`).join("")}
        </select>
        <select name="winner" class="hidden">
          <option value="">pick winner</option>
          ${winnerOptions}
        </select>
        <input name="note" type="text" placeholder="audit note" />
        <button type="submit">apply</button>
        <span class="form-error" role="alert"></span>
      </form>
    </article>`;
}

export interface QueueCallbacks {
  onError: (message: string) => void;
  onInfo: (message: string) => void;
  // called after a 409 so the whole queue is refreshed from the server
  onStale: () => void;
}

export function renderQueue(
  container: HTMLElement,
  items: QueueItem[],
  cb: QueueCallbacks,
): void {
  if (items.length === 0) {
    container.innerHTML = '<p class="empty">no items in the review queue</p>';
    return;
  }
  container.innerHTML = items.map(cardHtml).join("");
  for (const card of Array.from(container.querySelectorAll<HTMLElement>(".card"))) {
    wireCard(card, cb);
  }
}

function wireCard(card: HTMLElement, cb: QueueCallbacks): void {
  const form = card.querySelector("form")!;
  const actionSel = form.querySelector<HTMLSelectElement>('select[name="action"]')!;
  const winnerSel = form.querySelector<HTMLSelectElement>('select[name="winner"]')!;
  const note = form.querySelector<HTMLInputElement>('input[name="note"]')!;
  const button = form.querySelector<HTMLButtonElement>("button")!;
  const errorSpan = form.querySelector<HTMLElement>(".form-error")!;

  actionSel.addEventListener("change", () => {
    winnerSel.classList.toggle("hidden", actionSel.value !== "resolve_to");
  });

  form.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    if (button.disabled) return; // a POST is already in flight
    errorSpan.textContent = "";
    const action = actionSel.value;
    if (NOTE_REQUIRED.has(action) && !note.value.trim()) {
      errorSpan.textContent = "a note is required for this action";
      return;
    }
    if (action === "resolve_to" && !winnerSel.value) {
      errorSpan.textContent = "pick the winning rival";
      return;
    }
    button.disabled = true;

    // optimistic: pull the card out, put it back if the server refuses
    const parent = card.parentElement!;
    const marker = document.createComment("card");
    parent.replaceChild(marker, card);

    const body: { action: string; winner_id?: string; note?: string } = { action };
    if (action === "resolve_to") body.winner_id = winnerSel.value;
    if (note.value.trim()) body.note = note.value.trim();

    let result;
    try {
      result = await postDecision(card.dataset.nugget!, body);
    } catch {
      parent.replaceChild(card, marker);
      button.disabled = false;
      cb.onError("API unreachable; decision not applied");
      return;
    }
    if (result.ok) {
      marker.remove();
      cb.onInfo(`${result.data.action}: ${result.data.affected.length} record(s) changed`);
      cb.onStale(); // rivals in the same group may have resolved too
      return;
    }
    if (result.status === 409) {
      marker.remove();
      cb.onError("decision conflicted with another change; queue refreshed");
      cb.onStale();
      return;
    }
    parent.replaceChild(card, marker);
    button.disabled = false;
    errorSpan.textContent = result.error.detail ?? result.error.error;
  });
}

export async function loadQueue(
  container: HTMLElement,
  limit: number,
  cb: QueueCallbacks,
): Promise<void> {
  let result;
  try {
    result = await fetchQueue(limit);
  } catch {
    cb.onError("cannot reach the API");
    return;
  }
  if (!result.ok) {
    cb.onError(result.error.detail ?? result.error.error);
    return;
  }
  renderQueue(container, result.data.items, cb);
}
