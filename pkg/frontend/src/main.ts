import { HttpApiClient } from "./api.js";
import { mount } from "./app.js";

const base = (window as unknown as { UPRO_SERVICE_URL?: string }).UPRO_SERVICE_URL
  ?? "http://127.0.0.1:8000";
mount(document.getElementById("app")!, new HttpApiClient(base));
