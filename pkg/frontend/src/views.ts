/** HTML renderers: pure functions from API payloads to markup strings.
 *
 * Rules the whole file follows: render only fields the payload carries,
 * never compute a number the server did not send, and escape every piece
 * of document text. Buttons carry data-action attributes; the shell wires
 * them to the state store.
 */

import type { AppState } from "./state.js";
import type {
  RunDetail,
  RunSummary,
  TransitionEntry,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const esc = escapeHtml;

function button(action: string, label: string, data: Record<string, string>): string {
  const attrs = Object.entries(data)
    .map(([key, value]) => `data-${key}="${esc(value)}"`)
    .join(" ");
  return `<button data-action="${esc(action)}" ${attrs}>${esc(label)}</button>`;
}

export function renderBanners(state: AppState): string {
  const parts: string[] = [];
  if (!state.online) {
    parts.push(
      `<div class="banner offline">api unreachable; showing the last loaded state and retrying</div>`,
    );
  }
  if (state.notice) {
    // conflict and validation text straight from the server
    parts.push(`<div class="banner notice">${esc(state.notice)}</div>`);
  }
  return parts.join("");
}

export function renderFilterBar(filter: {
  stage?: string | null;
  gate?: string | null;
}): string {
  const stages = ["planned", "screenplay", "storyboard", "clips", "transitions", "final", "failed"];
  const gates = ["awaiting_approval", "approved", "rejected"];
  const stageOptions = ['<option value="">any stage</option>']
    .concat(
      stages.map(
        (s) =>
          `<option value="${s}"${filter.stage === s ? " selected" : ""}>${s}</option>`,
      ),
    )
    .join("");
  const gateOptions = ['<option value="">any gate</option>']
    .concat(
      gates.map(
        (g) =>
          `<option value="${g}"${filter.gate === g ? " selected" : ""}>${g}</option>`,
      ),
    )
    .join("");
  return `<div class="filter-bar">
    <label>stage <select data-filter="stage">${stageOptions}</select></label>
    <label>gate <select data-filter="gate">${gateOptions}</select></label>
  </div>`;
}

function gateBadges(gateStates: Record<string, string>): string {
  const entries = Object.entries(gateStates);
  if (entries.length === 0) return `<span class="muted">ungated</span>`;
  return entries
    .map(
      ([stage, value]) =>
        `<span class="gate gate-${esc(value)}">${esc(stage)}: ${esc(value)}</span>`,
    )
    .join(" ");
}

export function renderRunsTable(runs: RunSummary[]): string {
  if (runs.length === 0) {
    return `<p class="muted">no runs match the current filter</p>`;
  }
  const rows = runs
    .map((run) => {
      const warnings =
        run.warnings_count > 0
          ? `<span class="badge warn">${run.warnings_count}</span>`
          : "";
      const thumbs = run.thumbnail_refs
        .slice(0, 4)
        .map((ref) => `<img class="thumb" data-artifact="${esc(ref)}" alt="">`)
        .join("");
      const error = run.error
        ? `<div class="error-line">${esc(run.error)}</div>`
        : "";
      return `<tr data-run-row="${esc(run.run_id)}">
        <td><a href="#/runs/${encodeURIComponent(run.run_id)}">${esc(run.run_id)}</a>${error}</td>
        <td><span class="stage stage-${esc(run.stage)}">${esc(run.stage)}</span></td>
        <td>${gateBadges(run.gate_states)}</td>
        <td>${run.shot_count}</td>
        <td class="thumbs">${thumbs}</td>
        <td>${warnings}</td>
        <td class="muted">${esc(run.updated_at)}</td>
      </tr>`;
    })
    .join("");
  return `<table class="runs">
    <thead><tr>
      <th>run</th><th>stage</th><th>gates</th><th>shots</th>
      <th>keyframes</th><th>warnings</th><th>updated</th>
    </tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

function gateControls(detail: RunDetail, stage: string): string {
  if (detail.awaiting !== stage) return "";
  const data = { run: detail.run_id, stage };
  return `<div class="gate-controls">
    ${button("approve", "approve", data)}
    ${button("reject-hold", "reject (hold)", data)}
    ${button("reject-regenerate", "reject and regenerate", data)}
  </div>`;
}

export function renderScreenplayPanel(detail: RunDetail): string {
  const artifact = detail.artifacts.screenplay;
  if (!artifact || detail.rendered_screenplay === null) {
    return `<section class="panel"><h2>screenplay</h2>
      <p class="muted">not generated yet</p></section>`;
  }
  const editor =
    detail.awaiting === "screenplay"
      ? `<div class="editor">
          <textarea data-editor="scenario" rows="4">${esc(artifact.screenplay.scene.scenario)}</textarea>
          ${button("submit-edit", "submit edited scenario", { run: detail.run_id })}
        </div>`
      : "";
  return `<section class="panel"><h2>screenplay</h2>
    <pre class="screenplay">${esc(detail.rendered_screenplay)}</pre>
    ${gateControls(detail, "screenplay")}
    ${editor}
  </section>`;
}

export function renderStoryboardGallery(detail: RunDetail): string {
  const refs = detail.keyframe_refs;
  if (refs.length === 0) {
    return `<section class="panel"><h2>storyboard</h2>
      <p class="muted">no keyframes yet</p></section>`;
  }
  const frames = detail.artifacts.storyboard?.storyboard.keyframes ?? [];
  const tiles = refs
    .map((ref, index) => {
      const frame = frames[index];
      const caption = frame
        ? `<div class="muted">${esc(frame.model_id)}</div>`
        : "";
      return `<figure class="tile">
        <img data-artifact="${esc(ref)}" alt="keyframe ${index}">
        <figcaption>
          frame ${index} ${caption}
          ${button("regenerate", "regenerate", { run: detail.run_id, stage: "storyboard" })}
        </figcaption>
      </figure>`;
    })
    .join("");
  return `<section class="panel"><h2>storyboard</h2>
    <div class="gallery">${tiles}</div>
    ${gateControls(detail, "storyboard")}
  </section>`;
}

function transitionBlock(
  detail: RunDetail,
  entry: TransitionEntry,
  index: number,
): string {
  const warnings =
    entry.warnings.length > 0
      ? `<span class="badge warn">${entry.warnings.length}</span>
         <ul class="warnings">${entry.warnings
           .map((w) => `<li>${esc(w)}</li>`)
           .join("")}</ul>`
      : `<span class="muted">no warnings</span>`;
  // the shared keyframe is the anchor both clips meet at
  const anchorRef = detail.keyframe_refs[entry.pair[1]];
  const anchor = anchorRef
    ? `<div class="overlay-box">
        <img data-artifact="${esc(anchorRef)}" alt="anchor keyframe">
        <svg data-control="${esc(entry.control_ref)}" preserveAspectRatio="xMidYMid meet"></svg>
      </div>`
    : "";
  return `<article class="transition" data-pair="${entry.pair[0]}-${entry.pair[1]}">
    <h3>clips ${entry.pair[0]} to ${entry.pair[1]}</h3>
    <dl>
      <dt>trimmed</dt><dd>${entry.cut_a} + ${entry.cut_b} frames</dd>
      <dt>bridge</dt><dd>${entry.frames} frames</dd>
      <dt>warnings</dt><dd>${warnings}</dd>
    </dl>
    ${anchor}
    <p class="muted">transition ${index}</p>
  </article>`;
}

export function renderTransitionInspector(detail: RunDetail): string {
  const entries = detail.artifacts.transitions?.transitions;
  if (!entries) {
    return `<section class="panel"><h2>transitions</h2>
      <p class="muted">not planned yet</p></section>`;
  }
  if (entries.length === 0) {
    return `<section class="panel"><h2>transitions</h2>
      <p class="muted">single shot; nothing to bridge</p></section>`;
  }
  const blocks = entries
    .map((entry, index) => transitionBlock(detail, entry, index))
    .join("");
  return `<section class="panel"><h2>transitions</h2>${blocks}</section>`;
}

export function renderFinalPanel(detail: RunDetail): string {
  const final = detail.artifacts.final;
  if (!final) return "";
  return `<section class="panel"><h2>final cut</h2>
    <p>${final.total_frames} frames</p>
    <p><a data-artifact-link="${esc(final.video_ref)}" href="#">download video artifact</a></p>
  </section>`;
}

export function renderRunDetail(detail: RunDetail): string {
  const failure = detail.error
    ? `<div class="banner notice">failed at ${esc(detail.failed_stage ?? "?")}: ${esc(detail.error)}</div>`
    : "";
  return `<div class="detail">
    <header>
      <a href="#/runs">back to runs</a>
      <h1>${esc(detail.run_id)}</h1>
      <p>
        <span class="stage stage-${esc(detail.stage)}">${esc(detail.stage)}</span>
        revision ${detail.revision} | ${gateBadges(detail.gate_states)}
      </p>
    </header>
    ${failure}
    ${renderScreenplayPanel(detail)}
    ${renderStoryboardGallery(detail)}
    ${renderTransitionInspector(detail)}
    ${renderFinalPanel(detail)}
  </div>`;
}

export function renderRunsPage(state: AppState): string {
  return `<div class="list">
    <h1>pipeline runs</h1>
    ${renderFilterBar(state.filter)}
    ${renderRunsTable(state.runs)}
  </div>`;
}
