/** Wire types, mirroring the service's entity-form documents exactly. */

export interface EntitySummary {
  id: number;
  identifier: string;
  name: string;
  /** Row id of the link/target row; present in edit facets only. */
  link?: number;
}

export interface AttributeEntry {
  name: string;
  datatype: string;
  potency: number;
  /** Declaration id for PATCHing the slot; present in edit facets only. */
  attribute?: number;
  value?: string;
}

export interface ReferenceEntry {
  name: string;
  potency: number;
  ordered: boolean;
  minCard: number;
  maxCard: number | null;
  targets: EntitySummary[];
  admissible?: EntitySummary[];
  /** Declaration id for PATCHing links/targets; present in edit facets only. */
  reference?: number;
}

export interface EntityDocument {
  id: number;
  identifier: string;
  name: string;
  description: string;
  types: EntitySummary[];
  supertypes: EntitySummary[];
  attributes: AttributeEntry[];
  references: ReferenceEntry[];
}

export type Usage = "view" | "edit" | "instantiate" | "generalise";

export interface StepOutcome {
  step: number;
  kind: string;
  status: string;
  detail: Record<string, unknown>;
}

export interface RunResult {
  success: boolean;
  steps: StepOutcome[];
  context: Record<string, unknown>;
  error?: string;
}

export interface ValueEdit {
  attribute: number;
  value: string | null;
}

export interface LinkEdit {
  reference: number;
  add?: Array<number | { target: number; position: number }>;
  remove?: number[];
}

export interface PatchBody {
  namefields?: { identifier?: string; name?: string; description?: string };
  values?: ValueEdit[];
  targets?: LinkEdit[];
  links?: LinkEdit[];
}

export interface CreateBody {
  instantiate_of?: number;
  specialise_of?: number;
  identifier?: string;
  name?: string;
  description?: string;
}
