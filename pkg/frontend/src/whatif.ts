import { QueryRow, fetchQuery } from "./api";

// Query inspector: lets a reviewer see what retrieval returns at a point
// in time before and after a decision.

function esc(s: string): string {
  const div = document.createElement("div");
  div.textContent = s;
  return div.innerHTML;
}

function resultRow(row: QueryRow, idx: number): string {
  const rec = row.record;
  return `
    <li class="result-row">
      <span class="muted">#${idx + 1}</span>
      <span class="chip chip-${esc(rec.epistemic.status.toLowerCase())}">${esc(rec.epistemic.status)}</span>
      <span class="result-text">${esc(rec.text)}</span>
      <span class="muted">score ${row.score.toFixed(3)}</span>
    </li>`;
}

export function wireWhatIf(panel: HTMLElement, onError: (m: string) => void): void {
  const form = panel.querySelector<HTMLFormElement>("form")!;
  const text = form.querySelector<HTMLInputElement>('input[name="text"]')!;
  const at = form.querySelector<HTMLInputElement>('input[name="at"]')!;
  const view = form.querySelector<HTMLSelectElement>('select[name="view"]')!;
  const k = form.querySelector<HTMLInputElement>('input[name="k"]')!;
  const out = panel.querySelector<HTMLElement>(".query-out")!;

  if (!at.value) {
    at.value = new Date().toISOString().slice(0, 10);
  }

  async function run(): Promise<void> {
    if (!text.value.trim()) return;
    let result;
    try {
      result = await fetchQuery({
        text: text.value.trim(),
        at: at.value,
        view: view.value,
        k: Number(k.value) || 20,
      });
    } catch {
      onError("cannot reach the API");
      return;
    }
    if (!result.ok) {
      onError(result.error.detail ?? result.error.error);
      return;
    }
    const rows = result.data.results;
    if (rows.length === 0) {
      out.innerHTML = '<p class="empty">nothing retrievable for this query</p>';
      return;
    }
    out.innerHTML = `
      <ul class="results">${rows.map(resultRow).join("")}</ul>
      <pre class="context">${esc(result.data.context)}</pre>`;
  }

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void run();
  });
  // picking a new date re-queries immediately
  at.addEventListener("change", () => void run());
  view.addEventListener("change", () => void run());
}
