/** Single-page editor: hash routes, an entity browser, and entity panels.
 *
 * Routes: #/ lists entities with a name filter; #/entity/{id}/{mode} shows
 * one panel. The page is a pure client of the HTTP API; the base URL comes
 * from the api query parameter or defaults to the serving origin.
 */

import { ApiClient } from "./api.js";
import { clear, el } from "./dom.js";
import { PanelMode, renderEntityPanel } from "./panel.js";
import { renderRunControls } from "./runview.js";

export function apiBaseFromLocation(loc: Location): string {
  const params = new URLSearchParams(loc.search);
  return params.get("api") ?? loc.origin;
}

export class App {
  readonly client: ApiClient;

  constructor(
    readonly root: HTMLElement,
    client: ApiClient,
    private readonly setHash: (hash: string) => void = (h) => {
      window.location.hash = h;
    },
  ) {
    this.client = client;
  }

  navigate = (id: number, mode: PanelMode): void => {
    this.setHash(`#/entity/${id}/${mode}`);
  };

  async route(hash: string): Promise<void> {
    const match = /^#\/entity\/(\d+)\/(view|edit|instantiate|generalise)$/.exec(hash);
    if (match) {
      await this.showEntity(Number(match[1]), match[2] as PanelMode);
    } else {
      await this.showBrowser();
    }
  }

  async showBrowser(filter = ""): Promise<void> {
    clear(this.root);
    const page = el("div", { class: "browser" }, [el("h1", {}, ["Entities"])]);
    const search = el("input", { class: "search", placeholder: "filter by name" });
    search.value = filter;
    search.onchange = () => this.showBrowser(search.value);
    page.append(search);
    const list = el("ul", { class: "entity-list" });
    const entities = await this.client.listEntities(
      filter ? { nameLike: filter } : {},
    );
    for (const entity of entities) {
      const link = el("button", { class: "entity-link", "data-id": String(entity.id) }, [
        `${entity.name || entity.identifier || "(unnamed)"} `,
        el("span", { class: "muted" }, [`#${entity.id}`]),
      ]);
      link.onclick = () => this.navigate(entity.id, "view");
      list.append(el("li", {}, [link]));
    }
    page.append(list);
    this.root.append(page);
  }

  async showEntity(id: number, mode: PanelMode): Promise<void> {
    clear(this.root);
    const home = el("button", { class: "home" }, ["← all entities"]);
    home.onclick = () => this.setHash("#/");
    this.root.append(home);
    const host = el("div", { class: "panel-host" });
    this.root.append(host);
    const state = await renderEntityPanel(host, { client: this.client, navigate: this.navigate }, id, mode);
    if (state.doc && mode === "view") {
      await renderRunControls(host, this.client, id);
    }
  }
}

export function mount(root: HTMLElement, win: Window = window): App {
  const client = new ApiClient(apiBaseFromLocation(win.location));
  const app = new App(root, client);
  win.addEventListener("hashchange", () => {
    void app.route(win.location.hash);
  });
  void app.route(win.location.hash);
  return app;
}
