// Entry point: mount the studio on #app. The API origin defaults to the
// page's own origin; pass ?api=http://host:port to point elsewhere (the
// server sends permissive CORS headers).

import { StudioApi } from "./api.js";
import { StudioApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const base = new URLSearchParams(location.search).get("api") ?? "";
  const app = new StudioApp(new StudioApi(base), root);
  void app.init();
}
