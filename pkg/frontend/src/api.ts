/** Typed client for the model service. The UI owns no model state of its
 * own: everything rendered comes from documents this client fetched. */

import type {
  CreateBody,
  EntityDocument,
  EntitySummary,
  PatchBody,
  RunResult,
  Usage,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function readError(resp: Response): Promise<ApiError> {
  let code = `HTTP${resp.status}`;
  let message = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") {
      code = body.error;
      message = body.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) throw await readError(resp);
    return resp;
  }

  private json(body: unknown, method: string): RequestInit {
    return {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    };
  }

  async getEntity(id: number, usage: Usage = "view"): Promise<EntityDocument> {
    const resp = await this.request(`/api/entities/${id}?usage=${usage}`);
    return resp.json();
  }

  async listEntities(filters: { nameLike?: string; instanceOf?: number } = {}): Promise<EntitySummary[]> {
    const params = new URLSearchParams();
    if (filters.nameLike) params.set("name_like", filters.nameLike);
    if (filters.instanceOf !== undefined) params.set("instance_of", String(filters.instanceOf));
    const query = params.toString();
    const resp = await this.request(`/api/entities${query ? "?" + query : ""}`);
    return resp.json();
  }

  async createEntity(body: CreateBody): Promise<EntityDocument> {
    const resp = await this.request("/api/entities", this.json(body, "POST"));
    return resp.json();
  }

  async patchEntity(id: number, body: PatchBody): Promise<EntityDocument> {
    const resp = await this.request(`/api/entities/${id}`, this.json(body, "PATCH"));
    return resp.json();
  }

  async deleteEntity(id: number): Promise<void> {
    await this.request(`/api/entities/${id}`, { method: "DELETE" });
  }

  /** Run a function on an entity. A failed run (502) still resolves: the
   * partial outcome list is the result the caller renders. */
  async runFunction(entityId: number, functionId: number): Promise<RunResult> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/api/entities/${entityId}/run/${functionId}`,
      { method: "POST" },
    );
    if (resp.status === 200 || resp.status === 502) return resp.json();
    throw await readError(resp);
  }

  async convert(conversionId: number, entityId: number): Promise<string> {
    const resp = await this.request(`/api/convert/${conversionId}/${entityId}`, {
      method: "POST",
    });
    return resp.text();
  }

  /** Entities that are (transitive) instances of the builtin function. */
  async listFunctions(): Promise<EntitySummary[]> {
    const all = await this.listEntities();
    const fn = all.find((e) => e.identifier === "function");
    if (!fn) return [];
    return this.listEntities({ instanceOf: fn.id });
  }
}
