// Shapes of the management API payloads and the console's own models.

export interface FieldSpec {
  name: string;
  kind: "int" | "float" | "bool" | "text" | "bytes";
}

export interface OperationInfo {
  operation: string;
  description: string;
  service: string;
  status: string;
  params: FieldSpec[];
  returns: FieldSpec[];
}

export interface ServiceInfo {
  service_name: string;
  protocol: string;
  endpoint: string;
  version: number;
  status: string;
  operations: Array<{ name: string; description: string; params: FieldSpec[]; returns: FieldSpec[] }>;
}

export interface AuditRecord {
  seq: number;
  message_id: string;
  step: string;
  detail: string;
  at: number;
}

export interface RegistryEvent {
  change: "publish" | "unpublish" | "status" | "restore";
  service: string;
  version?: number;
  status?: string;
}

export interface DsnParams {
  one_way_delay_ms: number;
  jitter_ms: number;
  loss_probability: number;
  seed: number;
}

export interface DsnDoc {
  attached: boolean;
  params?: DsnParams;
  stats?: Record<string, { sent: number; delivered: number; dropped: number; in_flight: number }>;
}

// bytes results carry their base64 rendering in `text`
export interface ResultValue {
  name: string;
  kind: string;
  text: string;
}

export interface InvokeOutcome {
  ok: boolean;
  messageId: string;
  results: ResultValue[];
  faultCode?: string;
  faultDetail?: string;
}
