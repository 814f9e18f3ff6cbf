/** Entity panels: view, edit, instantiate, and generalise modes.
 *
 * Layout follows the service's documents: identifier, name, and description
 * on the left; attributes and references on the right, with target chips
 * navigating to their own panels. Nothing rendered here is invented: every
 * shown value comes from a fetched document field.
 *
 * Edit semantics: text edits (name fields, attribute values) collect in a
 * dirty buffer and reach the wire only on Save, as one PATCH. Link and
 * target chip operations are explicit actions and issue exactly one PATCH
 * each, with a single add or remove entry.
 */

import { ApiClient, ApiError } from "./api.js";
import { clear, el } from "./dom.js";
import type {
  AttributeEntry,
  EntityDocument,
  EntitySummary,
  PatchBody,
  ReferenceEntry,
  Usage,
} from "./types.js";

export type PanelMode = "view" | "edit" | "instantiate" | "generalise";

export interface DirtyBuffer {
  namefields: { identifier?: string; name?: string; description?: string };
  values: Map<number, string | null>;
}

export interface PanelState {
  id: number;
  mode: PanelMode;
  doc: EntityDocument | null;
  dirty: DirtyBuffer;
}

export interface PanelContext {
  client: ApiClient;
  navigate: (id: number, mode: PanelMode) => void;
}

const USAGE_FOR_MODE: Record<PanelMode, Usage> = {
  view: "view",
  edit: "edit",
  instantiate: "instantiate",
  generalise: "generalise",
};

function emptyDirty(): DirtyBuffer {
  return { namefields: {}, values: new Map() };
}

export function dirtyIsEmpty(dirty: DirtyBuffer): boolean {
  return Object.keys(dirty.namefields).length === 0 && dirty.values.size === 0;
}

export async function renderEntityPanel(
  container: HTMLElement,
  ctx: PanelContext,
  id: number,
  mode: PanelMode,
): Promise<PanelState> {
  const state: PanelState = { id, mode, doc: null, dirty: emptyDirty() };
  clear(container);
  try {
    state.doc = await ctx.client.getEntity(id, USAGE_FOR_MODE[mode]);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      container.append(notFoundCard(id));
      return state;
    }
    throw err;
  }
  const panel = el("section", { class: "panel", "data-entity": String(id) });
  panel.append(header(state, ctx));
  const columns = el("div", { class: "columns" });
  columns.append(leftColumn(state, ctx), rightColumn(state, ctx));
  panel.append(columns);
  container.append(panel);
  return state;
}

function notFoundCard(id: number): HTMLElement {
  return el("section", { class: "card not-found" }, [
    el("h2", {}, ["Not found"]),
    el("p", {}, [`No entity with id ${id} exists.`]),
  ]);
}

function header(state: PanelState, ctx: PanelContext): HTMLElement {
  const doc = state.doc!;
  const title = doc.name || doc.identifier || `entity ${doc.id}`;
  const bar = el("header", { class: "panel-header" }, [
    el("h2", {}, [modeLabel(state.mode, title)]),
  ]);
  const nav = el("nav", { class: "mode-switch" });
  for (const m of ["view", "edit", "instantiate", "generalise"] as PanelMode[]) {
    const button = el("button", { "data-mode": m }, [m]);
    if (m === state.mode) button.setAttribute("disabled", "");
    button.onclick = () => ctx.navigate(state.id, m);
    nav.append(button);
  }
  bar.append(nav);
  return bar;
}

function modeLabel(mode: PanelMode, title: string): string {
  if (mode === "instantiate") return `New instance of ${title}`;
  if (mode === "generalise") return `New specialisation of ${title}`;
  return title;
}

// --- left column: identity fields and lineage -------------------------------

function leftColumn(state: PanelState, ctx: PanelContext): HTMLElement {
  const doc = state.doc!;
  const col = el("div", { class: "column-left" });

  if (state.mode === "edit") {
    col.append(
      fieldInput(state, "identifier", doc.identifier),
      fieldInput(state, "name", doc.name),
      fieldInput(state, "description", doc.description),
      saveButton(state, ctx),
    );
  } else if (state.mode === "instantiate" || state.mode === "generalise") {
    col.append(creationForm(state, ctx));
  } else {
    col.append(
      fieldRow("identifier", doc.identifier),
      fieldRow("name", doc.name),
      fieldRow("description", doc.description),
    );
  }

  col.append(lineage("types", doc.types, ctx));
  col.append(lineage("supertypes", doc.supertypes, ctx));
  return col;
}

function fieldRow(label: string, value: string): HTMLElement {
  return el("div", { class: "field", "data-field": label }, [
    el("span", { class: "field-label" }, [label]),
    el("span", { class: "field-value" }, [value]),
  ]);
}

function fieldInput(state: PanelState, field: "identifier" | "name" | "description",
                    value: string): HTMLElement {
  const input = el("input", { value, "data-field": field });
  input.value = value;
  input.oninput = () => {
    state.dirty.namefields[field] = input.value;
  };
  return el("label", { class: "field" }, [field, input]);
}

function saveButton(state: PanelState, ctx: PanelContext): HTMLElement {
  const button = el("button", { class: "save" }, ["Save"]);
  button.onclick = async () => {
    if (dirtyIsEmpty(state.dirty)) return;
    const body: PatchBody = {};
    if (Object.keys(state.dirty.namefields).length) body.namefields = state.dirty.namefields;
    if (state.dirty.values.size) {
      body.values = [...state.dirty.values.entries()].map(([attribute, value]) => ({
        attribute,
        value,
      }));
    }
    try {
      await ctx.client.patchEntity(state.id, body);
      state.dirty = emptyDirty();
      ctx.navigate(state.id, "edit");
    } catch (err) {
      showError(button.parentElement!, err);
    }
  };
  return button;
}

function lineage(label: string, entries: EntitySummary[], ctx: PanelContext): HTMLElement {
  const box = el("div", { class: `lineage ${label}` }, [
    el("span", { class: "field-label" }, [label]),
  ]);
  for (const entry of entries) box.append(chip(entry, ctx));
  return box;
}

function chip(target: EntitySummary, ctx: PanelContext): HTMLElement {
  const button = el("button", { class: "chip", "data-target": String(target.id) }, [
    target.name || target.identifier || `#${target.id}`,
  ]);
  button.onclick = () => ctx.navigate(target.id, "view");
  return button;
}

// --- right column: attributes and references ---------------------------------

function rightColumn(state: PanelState, ctx: PanelContext): HTMLElement {
  const doc = state.doc!;
  const col = el("div", { class: "column-right" });
  col.append(el("h3", {}, ["Attributes"]));
  const attrs = el("ul", { class: "attributes" });
  for (const attr of doc.attributes) attrs.append(attributeRow(state, attr));
  col.append(attrs);
  col.append(el("h3", {}, ["References"]));
  const refs = el("div", { class: "references" });
  for (const ref of doc.references) refs.append(referenceBlock(state, ctx, ref));
  col.append(refs);
  return col;
}

function attributeRow(state: PanelState, attr: AttributeEntry): HTMLElement {
  const row = el("li", { class: "attribute", "data-name": attr.name }, [
    el("span", { class: "attr-name" }, [attr.name]),
    el("span", { class: "attr-type" }, [attr.datatype]),
    el("span", { class: "attr-potency" }, [`potency ${attr.potency}`]),
  ]);
  const isSlot = attr.potency === 0;
  if (!isSlot) return row;
  if (state.mode === "edit" && attr.attribute !== undefined) {
    const input = el("input", { class: "attr-value", "data-attribute": String(attr.attribute) });
    input.value = attr.value ?? "";
    input.oninput = () => {
      state.dirty.values.set(attr.attribute!, input.value === "" ? null : input.value);
    };
    row.append(input);
  } else {
    row.append(el("span", { class: "attr-value" }, [attr.value ?? ""]));
  }
  return row;
}

function referenceBlock(state: PanelState, ctx: PanelContext, ref: ReferenceEntry): HTMLElement {
  const block = el("div", { class: "reference", "data-name": ref.name }, [
    el("h4", {}, [
      ref.name,
      el("span", { class: "ref-meta" }, [
        ` potency ${ref.potency}${ref.ordered ? ", ordered" : ""}` +
        `, ${ref.minCard}..${ref.maxCard === null ? "*" : ref.maxCard}`,
      ]),
    ]),
  ]);
  const chips = el("div", { class: "targets" });
  for (const target of ref.targets) {
    const wrap = el("span", { class: "target" });
    wrap.append(chip(target, ctx));
    if (state.mode === "edit" && ref.reference !== undefined && target.link !== undefined) {
      wrap.append(removeTargetButton(state, ctx, ref, target.link));
    }
    chips.append(wrap);
  }
  block.append(chips);
  if (state.mode === "edit" && ref.reference !== undefined && ref.admissible !== undefined) {
    block.append(addTargetControl(state, ctx, ref));
  }
  return block;
}

/** The links list edits terminal link rows (potency 0 entries); declarations
 * at potency >= 1 edit their type-target rows instead. */
function editListFor(ref: ReferenceEntry): "links" | "targets" {
  return ref.potency === 0 ? "links" : "targets";
}

function removeTargetButton(state: PanelState, ctx: PanelContext,
                            ref: ReferenceEntry, rowId: number): HTMLElement {
  const button = el("button", { class: "remove-target", "data-link": String(rowId) }, ["×"]);
  button.onclick = async () => {
    const body: PatchBody = {
      [editListFor(ref)]: [{ reference: ref.reference!, remove: [rowId] }],
    };
    try {
      await ctx.client.patchEntity(state.id, body);
      ctx.navigate(state.id, "edit");
    } catch (err) {
      showError(button.parentElement!, err);
    }
  };
  return button;
}

function addTargetControl(state: PanelState, ctx: PanelContext,
                          ref: ReferenceEntry): HTMLElement {
  const select = el("select", { class: "admissible" });
  select.append(el("option", { value: "" }, ["add target…"]));
  for (const candidate of ref.admissible!) {
    select.append(el("option", { value: String(candidate.id) }, [
      candidate.name || candidate.identifier || `#${candidate.id}`,
    ]));
  }
  const button = el("button", { class: "add-target" }, ["Add"]);
  button.onclick = async () => {
    if (!select.value) return;
    const target = Number(select.value);
    const add = ref.ordered ? [{ target, position: ref.targets.length }] : [target];
    const body: PatchBody = {
      [editListFor(ref)]: [{ reference: ref.reference!, add }],
    };
    try {
      await ctx.client.patchEntity(state.id, body);
      ctx.navigate(state.id, "edit");
    } catch (err) {
      showError(button.parentElement!, err);
    }
  };
  return el("div", { class: "add-target-row" }, [select, button]);
}

// --- instantiate / generalise forms -------------------------------------------

function creationForm(state: PanelState, ctx: PanelContext): HTMLElement {
  const form = el("form", { class: "creation" });
  const fields: Record<string, HTMLInputElement> = {};
  for (const name of ["identifier", "name", "description"] as const) {
    const input = el("input", { "data-field": name });
    fields[name] = input;
    form.append(el("label", { class: "field" }, [name, input]));
    form.append(el("span", { class: "field-error", "data-error-for": name }));
  }
  const submit = el("button", { type: "submit" }, [
    state.mode === "instantiate" ? "Create instance" : "Create specialisation",
  ]);
  const cancel = el("button", { type: "button", class: "cancel" }, ["Cancel"]);
  cancel.onclick = () => ctx.navigate(state.id, "view");
  form.append(submit, cancel);
  form.onsubmit = async (event) => {
    event.preventDefault();
    const body = {
      [state.mode === "instantiate" ? "instantiate_of" : "specialise_of"]: state.id,
      identifier: fields.identifier.value,
      name: fields.name.value,
      description: fields.description.value,
    };
    try {
      const created = await ctx.client.createEntity(body);
      ctx.navigate(created.id, "edit");
    } catch (err) {
      if (err instanceof ApiError) {
        const slot = fieldForError(err.code);
        const box = form.querySelector(`[data-error-for="${slot}"]`)!;
        box.textContent = `${err.code}: ${err.message}`;
      } else {
        throw err;
      }
    }
  };
  return form;
}

function fieldForError(code: string): string {
  if (code === "DuplicateIdentifier") return "identifier";
  return "name";
}

function showError(into: HTMLElement, err: unknown): void {
  const text = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  let box = into.querySelector(":scope > .panel-error") as HTMLElement | null;
  if (!box) {
    box = el("span", { class: "panel-error" });
    into.append(box);
  }
  box.textContent = text;
}
