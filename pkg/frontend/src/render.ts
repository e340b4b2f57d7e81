/**
 * DOM rendering of the view model. Plain 2D schematic: machine panel, creel
 * grid, substrate and pattern strip, activity checklist, consequence
 * overlays pinned to their anchor elements, and the debrief page.
 */

import type { ConsequenceNote } from "./types.js";
import type { DebriefView, ViewModel } from "./viewmodel.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function overlayBadge(notes: ConsequenceNote[]): HTMLElement {
  const badge = el("div", "overlay");
  for (const note of notes) {
    const item = el("div", `overlay-note sev-${note.severity.toLowerCase()}`);
    item.appendChild(el("span", "overlay-error", note.error_id));
    item.appendChild(el("span", "overlay-text", note.text));
    badge.appendChild(item);
  }
  return badge;
}

export function renderView(root: HTMLElement, vm: ViewModel): void {
  root.replaceChildren();

  const header = el("div", "statusbar");
  header.appendChild(el("span", "session-id", vm.sessionId));
  header.appendChild(el("span", `session-status st-${vm.sessionStatus.toLowerCase()}`, vm.sessionStatus));
  header.appendChild(el("span", "tick", `tick ${vm.tick}`));
  root.appendChild(header);

  const grid = el("div", "panels");
  root.appendChild(grid);

  // Machine panel
  const machine = el("section", "panel machine");
  machine.dataset.anchor = "machine";
  machine.appendChild(el("h2", undefined, "Machine"));
  const light = el("div", `machine-status status-${vm.machine.statusClass}`, vm.machine.status);
  light.dataset.anchor = "machine.status";
  machine.appendChild(light);
  if (vm.machine.interlocked) {
    machine.appendChild(el("div", "interlock", "interlocked"));
  }
  const table = el("dl", "machine-params");
  for (const row of vm.machine.rows) {
    table.appendChild(el("dt", undefined, row.label));
    table.appendChild(el("dd", undefined, row.value));
  }
  machine.appendChild(table);
  if (vm.machineOverlays.length) {
    machine.appendChild(overlayBadge(vm.machineOverlays));
  }
  grid.appendChild(machine);

  // Creel grid
  const creel = el("section", "panel creel");
  creel.appendChild(el("h2", undefined, "Creel"));
  const cells = el("div", "creel-grid");
  for (const cell of vm.creel) {
    const slot = el("div", "slot" + (cell.occupied ? " occupied" : " empty"));
    slot.dataset.anchor = cell.elementId;
    slot.appendChild(el("div", "slot-index", `slot ${cell.slot}`));
    slot.appendChild(el("div", "slot-yarn", cell.yarnType ?? "(empty)"));
    const flags = el("div", "slot-flags");
    if (cell.connected) {
      flags.appendChild(el("span", "flag connected", "connected"));
    }
    if (cell.tensionBlocked) {
      flags.appendChild(el("span", "flag blocked", "tension"));
    }
    slot.appendChild(flags);
    if (cell.overlays.length) {
      slot.appendChild(overlayBadge(cell.overlays));
    }
    cells.appendChild(slot);
  }
  creel.appendChild(cells);
  grid.appendChild(creel);

  // Substrate + pattern strip
  const product = el("section", "panel product");
  product.dataset.anchor = "product";
  product.appendChild(el("h2", undefined, "Substrate and pattern"));
  const substrate = el("div", "substrate");
  substrate.dataset.anchor = "substrate";
  substrate.appendChild(el("div", "substrate-label", vm.substrate.label));
  const bar = el("div", "substrate-bar");
  const fill = el("div", "substrate-fill");
  fill.style.width = `${vm.substrate.progressPct.toFixed(2)}%`;
  bar.appendChild(fill);
  for (const seam of vm.substrate.seamsPct) {
    const mark = el("div", "seam");
    mark.style.left = `${seam.toFixed(2)}%`;
    bar.appendChild(mark);
  }
  substrate.appendChild(bar);
  product.appendChild(substrate);
  const strip = el("div", "pattern-strip");
  for (const row of vm.pattern) {
    const swatch = el("div", `row ${row.quality.toLowerCase()}`);
    swatch.title = row.title;
    strip.appendChild(swatch);
  }
  product.appendChild(strip);
  grid.appendChild(product);

  // Activity checklist
  const tasks = el("section", "panel tasks");
  tasks.appendChild(el("h2", undefined, "Activities"));
  const list = el("ul", "checklist");
  for (const entry of vm.checklist) {
    const item = el("li", `task st-${entry.state.toLowerCase()}`);
    item.appendChild(el("span", "badge", entry.badge));
    item.appendChild(el("span", "task-name", entry.activityId));
    if (entry.duration) {
      item.appendChild(el("span", "task-duration", entry.duration));
    }
    if (entry.errorCount) {
      item.appendChild(el("span", "task-errors", `${entry.errorCount} error(s)`));
    }
    list.appendChild(item);
  }
  tasks.appendChild(list);
  grid.appendChild(tasks);
}

export function renderDebrief(root: HTMLElement, view: DebriefView): void {
  root.replaceChildren();
  root.appendChild(el("h2", undefined, "Debrief"));
  root.appendChild(el("p", view.success ? "verdict success" : "verdict failure", view.headline));

  const criteria = el("ul", "criteria");
  for (const criterion of view.criteria) {
    criteria.appendChild(
      el("li", criterion.passed ? "passed" : "failed", `${criterion.passed ? "✓" : "✕"} ${criterion.label}`),
    );
  }
  root.appendChild(criteria);

  const activities = el("div", "debrief-activities");
  for (const activity of view.activities) {
    const card = el("div", `debrief-card st-${activity.state.toLowerCase()}`);
    card.appendChild(el("h3", undefined, activity.name));
    card.appendChild(el("div", "card-state", activity.state + (activity.duration ? `, ${activity.duration}` : "")));
    for (const error of activity.errors) {
      card.appendChild(el("div", "card-error", error.text));
      if (error.hint) {
        card.appendChild(el("div", "card-hint", `hint: ${error.hint}`));
      }
    }
    activities.appendChild(card);
  }
  root.appendChild(activities);

  if (view.timeline.length) {
    root.appendChild(el("h3", undefined, "Error timeline"));
    const timeline = el("ol", "timeline");
    for (const entry of view.timeline) {
      const item = el("li", undefined, `tick ${entry.tick}: ${entry.label}`);
      if (entry.hint) {
        item.appendChild(el("div", "card-hint", `hint: ${entry.hint}`));
      }
      timeline.appendChild(item);
    }
    root.appendChild(timeline);
  }

  const counts = el("dl", "debrief-counts");
  for (const count of view.counts) {
    counts.appendChild(el("dt", undefined, count.label));
    counts.appendChild(el("dd", undefined, String(count.value)));
  }
  root.appendChild(counts);
}
