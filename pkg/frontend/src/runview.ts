/** Function execution view: pick a function, run it on the entity, and show
 * the step outcomes in execution order with the final context inspectable
 * as a collapsible tree. A failed run renders its partial outcomes plus a
 * failure banner. */

import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import type { RunResult } from "./types.js";

export async function renderRunControls(
  container: HTMLElement,
  client: ApiClient,
  entityId: number,
): Promise<void> {
  const box = el("div", { class: "run-controls" }, [el("h3", {}, ["Run function"])]);
  const functions = await client.listFunctions();
  if (functions.length === 0) {
    box.append(el("p", { class: "muted" }, ["No functions defined."]));
    container.append(box);
    return;
  }
  const select = el("select", { class: "function-pick" });
  for (const fn of functions) {
    select.append(el("option", { value: String(fn.id) }, [
      fn.name || fn.identifier || `#${fn.id}`,
    ]));
  }
  const button = el("button", { class: "run" }, ["Run"]);
  const resultBox = el("div", { class: "run-result" });
  button.onclick = async () => {
    const result = await client.runFunction(entityId, Number(select.value));
    renderRunResult(resultBox, result);
  };
  box.append(el("div", {}, [select, button]), resultBox);
  container.append(box);
}

export function renderRunResult(container: HTMLElement, result: RunResult): void {
  clear(container);
  if (!result.success) {
    container.append(el("div", { class: "banner failure" }, [
      "Run failed" + (result.error ? ` (${result.error})` : ""),
    ]));
  }
  if (result.steps.length === 0) {
    container.append(el("p", { class: "muted no-steps" }, ["No steps."]));
  }
  const list = el("ol", { class: "outcomes" });
  for (const step of result.steps) {
    const row = el("li", { class: `outcome ${step.status}`, "data-step": String(step.step) }, [
      el("span", { class: "badge" }, [step.status]),
      el("span", { class: "step-kind" }, [step.kind]),
      el("span", { class: "step-entity" }, [`#${step.step}`]),
    ]);
    if (typeof step.detail.status_code === "number") {
      row.append(el("span", { class: "step-status-code" }, [String(step.detail.status_code)]));
    }
    if (typeof step.detail.error === "string") {
      row.append(el("span", { class: "step-error" }, [step.detail.error]));
    }
    list.append(row);
  }
  container.append(list, contextTree("context", result.context));
}

function contextTree(label: string, value: unknown): HTMLElement {
  if (value !== null && typeof value === "object") {
    const node = el("details", { class: "context-node" }, [
      el("summary", {}, [label]),
    ]);
    const entries = Array.isArray(value)
      ? value.map((v, i) => [String(i), v] as const)
      : Object.entries(value as Record<string, unknown>);
    for (const [key, child] of entries) node.append(contextTree(key, child));
    return node;
  }
  return el("div", { class: "context-leaf" }, [`${label}: ${String(value)}`]);
}
