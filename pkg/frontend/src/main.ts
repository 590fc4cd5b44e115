/** Browser shell: routing, event delegation, and artifact hydration.
 *
 * Everything testable lives in api/state/views/geometry; this file only
 * glues them to the DOM. Views put refs in data attributes instead of
 * URLs so this layer can decide between direct links (no token) and
 * blob URLs fetched with the auth header.
 */

import { ApiClient } from "./api.js";
import { controlFieldShapes, viewBoxOf } from "./geometry.js";
import { StateStore, type AppState } from "./state.js";
import { renderBanners, renderRunDetail, renderRunsPage } from "./views.js";

const POLL_MS = 4000;
const TOKEN_KEY = "review-api-token";

function resolveToken(): string | null {
  const fromQuery = new URLSearchParams(window.location.search).get("token");
  if (fromQuery !== null) {
    window.localStorage.setItem(TOKEN_KEY, fromQuery);
    return fromQuery;
  }
  return window.localStorage.getItem(TOKEN_KEY);
}

function currentRoute(): { page: "list" } | { page: "run"; runId: string } {
  const hash = window.location.hash;
  const match = /^#\/runs\/(.+)$/.exec(hash);
  if (match && match[1]) {
    return { page: "run", runId: decodeURIComponent(match[1]) };
  }
  return { page: "list" };
}

function main(): void {
  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app container");
  const app: HTMLElement = mount;

  const token = resolveToken();
  const api = new ApiClient({ token });
  const store = new StateStore(api);

  // hydration caches; object URLs are reused across re-renders
  const blobUrls = new Map<string, string>();
  const controlCache = new Map<string, string>();

  async function imageUrl(ref: string): Promise<string> {
    if (token === null) return api.artifactUrl(ref);
    const cached = blobUrls.get(ref);
    if (cached) return cached;
    const blob = await api.artifactBlob(ref);
    const url = URL.createObjectURL(blob);
    blobUrls.set(ref, url);
    return url;
  }

  function hydrateImages(root: HTMLElement): void {
    for (const img of root.querySelectorAll<HTMLImageElement>("img[data-artifact]")) {
      const ref = img.dataset.artifact;
      if (!ref || img.dataset.hydrated) continue;
      img.dataset.hydrated = "1";
      void imageUrl(ref).then(
        (url) => {
          img.src = url;
        },
        () => {
          img.alt = "artifact unavailable";
        },
      );
    }
    for (const link of root.querySelectorAll<HTMLAnchorElement>("a[data-artifact-link]")) {
      const ref = link.dataset.artifactLink;
      if (!ref) continue;
      link.href = api.artifactUrl(ref);
    }
  }

  function hydrateOverlays(root: HTMLElement): void {
    for (const svg of root.querySelectorAll<SVGSVGElement>("svg[data-control]")) {
      const ref = svg.dataset.control;
      if (!ref || svg.dataset.hydrated) continue;
      svg.dataset.hydrated = "1";
      const cached = controlCache.get(ref);
      if (cached !== undefined) {
        svg.outerHTML = cached;
        continue;
      }
      void api.controlField(ref).then(
        (field) => {
          svg.setAttribute("viewBox", viewBoxOf(field));
          const shapes = controlFieldShapes(field);
          svg.innerHTML = shapes
            .map(
              (shape) =>
                `<path d="${shape.d}" fill="none"></path>` +
                `<circle cx="${shape.start.x}" cy="${shape.start.y}" r="4"></circle>` +
                `<circle class="end" cx="${shape.end.x}" cy="${shape.end.y}" r="4"></circle>`,
            )
            .join("");
          controlCache.set(ref, svg.outerHTML);
        },
        () => {
          svg.dataset.hydrated = "";
        },
      );
    }
  }

  function render(state: AppState): void {
    const route = currentRoute();
    let body: string;
    if (route.page === "run") {
      body = state.selected
        ? renderRunDetail(state.selected)
        : `<p class="muted">loading ${route.runId}</p>`;
    } else {
      body = renderRunsPage(state);
    }
    app.innerHTML = renderBanners(state) + body;
    hydrateImages(app);
    hydrateOverlays(app);
  }

  store.subscribe(render);

  async function syncRoute(): Promise<void> {
    const route = currentRoute();
    if (route.page === "run") {
      await store.open(route.runId);
    } else {
      store.close();
      await store.refreshRuns();
    }
  }

  window.addEventListener("hashchange", () => {
    void syncRoute();
  });

  app.addEventListener("change", (event) => {
    const target = event.target as HTMLElement;
    if (!(target instanceof HTMLSelectElement)) return;
    const key = target.dataset.filter;
    if (key !== "stage" && key !== "gate") return;
    const next = { ...store.state.filter, [key]: target.value || null };
    void store.setFilter(next);
  });

  app.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>(
      "[data-action]",
    );
    if (!target) return;
    const action = target.dataset.action;
    const runId = target.dataset.run;
    const stage = target.dataset.stage ?? "";
    if (!action || !runId) return;
    event.preventDefault();
    switch (action) {
      case "approve":
        void store.approve(runId, stage);
        break;
      case "reject-hold":
        void store.rejectHold(runId, stage);
        break;
      case "reject-regenerate":
        void store.rejectRegenerate(runId, stage);
        break;
      case "regenerate":
        void store.regenerate(runId, stage);
        break;
      case "submit-edit": {
        const editor = app.querySelector<HTMLTextAreaElement>(
          "textarea[data-editor='scenario']",
        );
        if (editor) void store.rejectWithEdit(runId, editor.value);
        break;
      }
      default:
        break;
    }
  });

  store.startPolling(POLL_MS);
  void syncRoute();
}

main();
