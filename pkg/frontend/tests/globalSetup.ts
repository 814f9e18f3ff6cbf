/** Starts the model service against a seeded scratch database so the
 * integration tests exercise the UI against live HTTP. Requires the Python
 * package to be installed (the `multilevel` command on PATH). */

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { TestProject } from "vitest/node";

const SEED_FUNCTION = `
import json, sys
from multilevel.builtins import ensure_builtins
from multilevel.store import Store

db, base = sys.argv[1], sys.argv[2]
store = Store(db)
model = store.load()
ids = ensure_builtins(model)
decls = {d.name: d.id for d in model.own_attributes(ids["action"])}

a1 = model.instantiate(ids["action"], "list_margheritas", "List margheritas")
model.assign_value(a1, decls["method"], "GET")
model.assign_value(a1, decls["address"], base + "/api/entities?name_like=margherita")
model.assign_value(a1, decls["output_key"], "listing")

a2 = model.instantiate(ids["action"], "fetch_subject", "Fetch subject")
model.assign_value(a2, decls["method"], "GET")
model.assign_value(a2, decls["address"], base + "/api/entities/\${entity.id}")
model.assign_value(a2, decls["output_key"], "subject")

steps = next(d for d in model.own_references(ids["function"]) if d.name == "steps")
fn = model.instantiate(ids["function"], "inspect_entity", "Inspect entity")
model.link_target(fn, steps.id, a1, position=0)
model.link_target(fn, steps.id, a2, position=1)
store.persist(model)
print(json.dumps({"function": fn, "first_action": a1, "second_action": a2}))
`;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address && typeof address === "object") {
        const port = address.port;
        srv.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

async function waitReady(url: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(url + "/api/entities");
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`service at ${url} did not become ready`);
}

let server: ChildProcess | undefined;

export default async function setup(project: TestProject): Promise<() => void> {
  const dir = mkdtempSync(join(tmpdir(), "multilevel-ui-"));
  const db = `sqlite:///${join(dir, "ui.db")}`;
  const port = await freePort();
  const base = `http://127.0.0.1:${port}`;

  execFileSync("multilevel", ["migrate", "--db", db]);
  const seeded = JSON.parse(
    execFileSync("multilevel", ["seed-demo", "--db", db], { encoding: "utf-8" }),
  );
  const fnIds = JSON.parse(
    execFileSync("python3", ["-c", SEED_FUNCTION, db, base], { encoding: "utf-8" }),
  );

  server = spawn("multilevel", ["serve", "--db", db, "--bind", `127.0.0.1:${port}`], {
    stdio: "ignore",
  });
  await waitReady(base);

  project.provide("baseUrl", base);
  project.provide("ids", { ...seeded, ...fnIds });

  return () => {
    server?.kill();
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    baseUrl: string;
    ids: Record<string, number>;
  }
}
