import { ApiClient } from "./api.js";
import { renderView } from "./render.js";
import { ActionReporter } from "./tracker.js";
import { UiSession } from "./viewmodel.js";

const sessionId = `web-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const contract = await api.contract();
  const reporter = new ActionReporter("");
  const session = new UiSession(sessionId, api, contract, reporter);

  const root = document.getElementById("app")!;
  const debug = document.getElementById("debug")!;

  const redraw = () => {
    root.innerHTML = renderView(session);
    debug.textContent =
      `session ${sessionId} · view ${session.view}` +
      ` · alerts seen ${session.alertsSeen} · dropped events ${reporter.dropped}`;
  };

  root.addEventListener("click", (ev) => {
    const el = (ev.target as HTMLElement).closest<HTMLElement>(
      '[data-component-id][data-kind="click"]',
    );
    if (!el) return;
    void session
      .performAction(el.dataset["componentId"]!, "click")
      .catch((e) => console.error(e))
      .finally(redraw);
  });

  root.addEventListener("change", (ev) => {
    const el = ev.target as HTMLInputElement;
    if (el.dataset["componentId"] && el.dataset["kind"] === "text-input") {
      void session
        .performAction(el.dataset["componentId"], "text-input", el.value)
        .catch((e) => console.error(e))
        .finally(redraw);
    }
  });

  redraw();
}

void boot();
