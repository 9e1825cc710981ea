// Bootstrap: wire the store, the event stream, and the view together.

import { BusApi } from "./api.js";
import { ConsoleView } from "./render.js";
import { subscribeEvents } from "./sse.js";
import { ConsoleState } from "./state.js";
import type { AuditRecord, RegistryEvent } from "./types.js";

const state = new ConsoleState();
const api = new BusApi(""); // same origin as the management listener

async function refreshCatalog(): Promise<void> {
  const [services, operations] = await Promise.all([
    api.listServices(),
    api.listOperations(),
  ]);
  state.setCatalog(services, operations);
  try {
    state.setDsn(await api.getDsn());
  } catch {
    state.setDsn({ attached: false });
  }
}

state.onChange(() => {
  if (state.catalogStale) {
    state.catalogStale = false; // single refetch per burst
    refreshCatalog().catch(() => {
      state.catalogStale = true;
    });
  }
});

subscribeEvents(
  api.baseUrl,
  (event) => {
    const data = JSON.parse(event.data);
    if (event.event === "registry") state.applyRegistryEvent(data as RegistryEvent);
    else if (event.event === "audit") state.applyAuditRecord(data as AuditRecord);
  },
  (status) => state.setConnection(status),
);

const credentials = {
  rover: () =>
    (document.getElementById("rover-credential") as HTMLInputElement).value,
  management: () =>
    (document.getElementById("mgmt-credential") as HTMLInputElement).value,
};

const view = new ConsoleView(
  document.getElementById("app")!, state, api, credentials);
view.render();
void refreshCatalog();
