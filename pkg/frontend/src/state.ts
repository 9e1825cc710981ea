// The console's single store.  Only confirmed server state lands here:
// registry events trigger a refetch (no optimistic mutation), audit
// records append to per-message traces.

import type {
  AuditRecord,
  DsnDoc,
  OperationInfo,
  RegistryEvent,
  ServiceInfo,
} from "./types.js";
import type { ConnectionStatus } from "./sse.js";

const TRACE_LIMIT = 200;

export class ConsoleState {
  services: ServiceInfo[] = [];
  operations: OperationInfo[] = [];
  traces = new Map<string, AuditRecord[]>();
  traceOrder: string[] = [];
  connection: ConnectionStatus = "connecting";
  dsn: DsnDoc = { attached: false };
  catalogStale = true;
  lastRegistryEvent?: RegistryEvent;

  private listeners: Array<() => void> = [];

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l();
  }

  setCatalog(services: ServiceInfo[], operations: OperationInfo[]): void {
    this.services = [...services].sort((a, b) => a.service_name.localeCompare(b.service_name));
    this.operations = operations;
    this.catalogStale = false;
    this.emit();
  }

  setConnection(status: ConnectionStatus): void {
    if (status !== this.connection) {
      this.connection = status;
      if (status === "live") this.catalogStale = true; // resync after a gap
      this.emit();
    }
  }

  setDsn(doc: DsnDoc): void {
    this.dsn = doc;
    this.emit();
  }

  applyRegistryEvent(event: RegistryEvent): void {
    this.lastRegistryEvent = event;
    this.catalogStale = true; // confirmed state is refetched, never guessed
    this.emit();
  }

  applyAuditRecord(record: AuditRecord): void {
    let trace = this.traces.get(record.message_id);
    if (!trace) {
      trace = [];
      this.traces.set(record.message_id, trace);
      this.traceOrder.push(record.message_id);
      while (this.traceOrder.length > TRACE_LIMIT) {
        const evicted = this.traceOrder.shift();
        if (evicted) this.traces.delete(evicted);
      }
    }
    trace.push(record);
    trace.sort((a, b) => a.seq - b.seq);
    this.emit();
  }

  trace(messageId: string): AuditRecord[] {
    return this.traces.get(messageId) ?? [];
  }

  serviceFor(operation: string): string | undefined {
    return this.operations.find((o) => o.operation === operation)?.service;
  }

  operationsByService(): Map<string, OperationInfo[]> {
    const grouped = new Map<string, OperationInfo[]>();
    for (const op of this.operations) {
      const list = grouped.get(op.service) ?? [];
      list.push(op);
      grouped.set(op.service, list);
    }
    return grouped;
  }
}
