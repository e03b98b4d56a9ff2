import { apiBaseFromLocation, LabelApi } from "./api.js";
import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const api = new LabelApi(apiBaseFromLocation(window.location.search));
void new App(root, api).init();
