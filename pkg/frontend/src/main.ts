import { loadQueue } from "./queue";
import { wireWhatIf } from "./whatif";

const SHELL = `
  <header class="top">
    <h1>fact review</h1>
    <div class="banner hidden" role="status">
      <span class="banner-text"></span>
      <button type="button" class="retry">retry</button>
    </div>
  </header>
  <main>
    <section class="queue-panel">
      <div class="queue-head">
        <h2>review queue</h2>
        <label class="muted">show
          <input type="number" name="limit" value="50" min="1" />
        </label>
        <button type="button" class="reload">reload</button>
      </div>
      <div class="queue"></div>
    </section>
    <section class="whatif-panel">
      <h2>query inspector</h2>
      <form class="whatif">
        <input name="text" type="text" placeholder="ask at a point in time" />
        <input name="at" type="date" />
        <select name="view">
          <option value="active">active</option>
          <option value="active_plus_contested">active + contested</option>
        </select>
        <input name="k" type="number" value="20" min="1" />
        <button type="submit">run</button>
      </form>
      <div class="query-out"></div>
    </section>
  </main>`;

export function initConsole(doc: Document): void {
  const app = doc.getElementById("app");
  if (!app) throw new Error("missing #app mount point");
  app.innerHTML = SHELL;

  const banner = app.querySelector<HTMLElement>(".banner")!;
  const bannerText = banner.querySelector<HTMLElement>(".banner-text")!;
  const retry = banner.querySelector<HTMLButtonElement>(".retry")!;
  const queueBox = app.querySelector<HTMLElement>(".queue")!;
  const limitInput = app.querySelector<HTMLInputElement>('input[name="limit"]')!;
  const reload = app.querySelector<HTMLButtonElement>(".reload")!;

  const showError = (message: string): void => {
    bannerText.textContent = message;
    banner.classList.remove("hidden");
    banner.classList.add("banner-error");
  };
  const showInfo = (message: string): void => {
    bannerText.textContent = message;
    banner.classList.remove("hidden", "banner-error");
  };

  const refresh = (): void => {
    void loadQueue(queueBox, Number(limitInput.value) || 50, {
      onError: showError,
      onInfo: showInfo,
      onStale: refresh,
    });
  };
  const reloadClean = (): void => {
    banner.classList.add("hidden");
    refresh();
  };

  retry.addEventListener("click", reloadClean);
  reload.addEventListener("click", reloadClean);
  limitInput.addEventListener("change", refresh);

  wireWhatIf(app.querySelector<HTMLElement>(".whatif-panel")!, showError);
  refresh();
}
