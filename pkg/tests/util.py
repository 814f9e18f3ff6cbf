"""Shared test helpers: brute-force oracles, random model generators, and
HTTP fixtures. Oracles stay independent of the code paths they check."""

from __future__ import annotations

import json
import random
import socket
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from multilevel.kernel import ModelGraph


# --- graph oracles -------------------------------------------------------------


def oracle_reachable(edges: set[tuple[int, int]], start: int, goal: int) -> bool:
    """Plain depth-first reachability over an explicit edge set."""
    stack = [start]
    seen = set()
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(b for a, b in edges if a == node)
    return False


def oracle_closure(edges: set[tuple[int, int]], start: int) -> set[int]:
    """Reachable set by repeated squaring of the adjacency matrix."""
    nodes = sorted({n for e in edges for n in e} | {start})
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    reach = [[False] * n for _ in range(n)]
    for a, b in edges:
        reach[index[a]][index[b]] = True
    changed = True
    while changed:
        changed = False
        nxt = [row[:] for row in reach]
        for i in range(n):
            for j in range(n):
                if not nxt[i][j]:
                    if any(reach[i][k] and reach[k][j] for k in range(n)):
                        nxt[i][j] = True
                        changed = True
        reach = nxt
    return {nodes[j] for j in range(n) if reach[index[start]][j]}


def oracle_bfs_depth(edges: set[tuple[int, int]], start: int, goal: int):
    """Shortest hop count from start to goal, None if unreachable."""
    if start == goal:
        return 0
    frontier = {start}
    seen = {start}
    depth = 0
    while frontier:
        depth += 1
        nxt = set()
        for node in frontier:
            for a, b in edges:
                if a == node:
                    if b == goal:
                        return depth
                    if b not in seen:
                        seen.add(b)
                        nxt.add(b)
        frontier = nxt
    return None


def oracle_acyclic_after(edges: set[tuple[int, int]], new_edge: tuple[int, int]) -> bool:
    """Would the edge set stay acyclic (irreflexive, asymmetric closure)?"""
    a, b = new_edge
    if a == b:
        return False
    return not oracle_reachable(edges, b, a)


# --- random models --------------------------------------------------------------


def random_base_model(rng: random.Random, n_entities: int = 6,
                      max_potency: int = 3) -> tuple[ModelGraph, list[int]]:
    """A model of bare entities with random attribute/reference declarations."""
    m = ModelGraph()
    ids = [m.add_entity("", f"E{i}", "") for i in range(n_entities)]
    for eid in ids:
        for k in range(rng.randint(0, 2)):
            m.declare_attribute(eid, f"a{eid}_{k}",
                                rng.choice(("string", "integer", "decimal", "boolean")),
                                rng.randint(1, max_potency))
        for k in range(rng.randint(0, 2)):
            m.declare_reference(eid, f"r{eid}_{k}", rng.randint(1, max_potency),
                                ordered=rng.random() < 0.3,
                                min_card=0, max_card=None,
                                type_targets=rng.sample(ids, rng.randint(0, min(2, len(ids)))))
    return m, ids


def instantiate_chain(m: ModelGraph, base: int, length: int) -> list[int]:
    chain = [base]
    for i in range(length):
        chain.append(m.instantiate(chain[-1], "", f"inst_{base}_{i}", ""))
    return chain


_LITERALS = {
    "string": lambda rng: rng.choice(("", "abc", "x y z", "Ünïcode")),
    "integer": lambda rng: str(rng.randint(-99, 99)),
    "decimal": lambda rng: f"{rng.randint(0, 99)}.{rng.randint(0, 99)}",
    "boolean": lambda rng: rng.choice(("true", "false")),
}


def random_ops_model(rng: random.Random, steps: int = 40,
                     max_entities: int = 8, max_potency: int = 3) -> ModelGraph:
    """Apply a random sequence of kernel operations, ignoring rejected ones.

    The resulting model only ever saw error-free operations, which is the
    premise of the constructive-safety property.
    """
    from multilevel.errors import ModelError

    m = ModelGraph()
    m.add_entity("", "seed", "")

    def entity(par=None):
        return rng.choice(sorted(m.entities))

    for _ in range(steps):
        op = rng.randrange(10)
        try:
            if op == 0 and len(m.entities) < max_entities:
                m.add_entity("", f"E{m.counter}", "")
            elif op == 1:
                m.declare_attribute(entity(), f"a{m.counter}",
                                    rng.choice(tuple(_LITERALS)),
                                    rng.randint(1, max_potency))
            elif op == 2:
                targets = [entity() for _ in range(rng.randint(0, 2))]
                m.declare_reference(entity(), f"r{m.counter}",
                                    rng.randint(1, max_potency),
                                    ordered=rng.random() < 0.3,
                                    min_card=0,
                                    max_card=rng.choice((None, None, 1, 3)),
                                    type_targets=set(targets))
            elif op == 3:
                m.assert_instance_of(entity(), entity())
            elif op == 4:
                m.assert_specialisation(entity(), entity())
            elif op == 5 and len(m.entities) < max_entities:
                m.instantiate(entity(), "", f"I{m.counter}", "")
            elif op == 6 and m.attributes:
                d = m.attributes[rng.choice(sorted(m.attributes))]
                m.assign_value(entity(), d.id, _LITERALS[d.datatype](rng))
            elif op == 7 and m.references:
                d = m.references[rng.choice(sorted(m.references))]
                holder = entity()
                pos = None
                if d.ordered:
                    if holder == d.owner:
                        pos = len(m.decl_type_targets(d.id))
                    else:
                        ls = m.link_set_of(holder, d.id)
                        pos = len(m.links_of(ls.id)) if ls else 0
                m.link_target(holder, d.id, entity(), pos)
            elif op == 8 and m.links and rng.random() < 0.5:
                m.remove_link(rng.choice(sorted(m.links)))
            elif op == 9 and len(m.entities) > 1 and rng.random() < 0.2:
                m.delete_entity(entity())
        except ModelError:
            continue
    return m


# --- model builders for function tests -----------------------------------------


def build_action(m: ModelGraph, method: str, address: str,
                 body_template: str | None = None,
                 output_key: str | None = None, name: str = "") -> int:
    """An action instance with its call definition filled in."""
    from multilevel.builtins import ensure_builtins

    ids = ensure_builtins(m)
    decls = {d.name: d.id for d in m.own_attributes(ids["action"])}
    act = m.instantiate(ids["action"], "", name or f"action {m.counter}", "")
    m.assign_value(act, decls["method"], method)
    m.assign_value(act, decls["address"], address)
    if body_template is not None:
        m.assign_value(act, decls["body_template"], body_template)
    if output_key is not None:
        m.assign_value(act, decls["output_key"], output_key)
    return act


def build_function(m: ModelGraph, steps: list[int], name: str = "") -> int:
    """A function instance whose ordered steps reference the given entities."""
    from multilevel.builtins import ensure_builtins

    ids = ensure_builtins(m)
    steps_decl = next(d for d in m.own_references(ids["function"]) if d.name == "steps")
    fn = m.instantiate(ids["function"], "", name or f"function {m.counter}", "")
    for pos, step in enumerate(steps):
        m.link_target(fn, steps_decl.id, step, position=pos)
    return fn


# --- recording HTTP stub -----------------------------------------------------------


class _StubHandler(BaseHTTPRequestHandler):
    def _serve(self):
        server = self.server
        body_len = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(body_len).decode("utf-8") if body_len else ""
        record = {
            "method": self.command,
            "path": self.path,
            "body": body,
            "at": time.monotonic(),
        }
        server.requests.append(record)
        for prefix, (status, payload) in server.routes.items():
            if self.path.startswith(prefix):
                data = payload(record) if callable(payload) else payload
                raw = json.dumps(data).encode() if isinstance(data, (dict, list)) \
                    else str(data).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)
                return
        self.send_response(404)
        self.send_header("Content-Length", "2")
        self.end_headers()
        self.wfile.write(b"{}")

    do_GET = do_POST = do_PUT = do_PATCH = do_DELETE = _serve

    def log_message(self, *args):
        pass


class StubServer:
    """Records every request; responses are scripted per path prefix."""

    def __init__(self):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.server.requests = []
        self.server.routes = {}
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def base_url(self) -> str:
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self) -> list[dict]:
        return self.server.requests

    def route(self, prefix: str, status: int = 200, payload=None):
        self.server.routes[prefix] = (status, payload if payload is not None else {})

    def close(self):
        self.server.shutdown()
        self.server.server_close()


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """A real uvicorn server in a thread, for flows that call back into the API."""

    def __init__(self, app, port: int | None = None):
        import uvicorn

        self.port = port or free_port()
        config = uvicorn.Config(app, host="127.0.0.1", port=self.port,
                                log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.thread.start()
        deadline = time.time() + 10
        while not self.server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.02)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    def close(self):
        self.server.should_exit = True
        self.thread.join(timeout=5)
