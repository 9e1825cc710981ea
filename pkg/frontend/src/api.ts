// Typed client for the bus: the /ops/* management surface plus
// rover-style invocation through POST /esb (same origin).

import { encodeRequest, newMessageId, parseResponse } from "./envelope.js";
import type { ParamText } from "./envelope.js";
import type {
  AuditRecord,
  DsnDoc,
  DsnParams,
  InvokeOutcome,
  OperationInfo,
  ServiceInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public fault: string, detail: string) {
    super(`${fault}: ${detail}`);
  }
}

async function getJson(url: string): Promise<any> {
  const resp = await fetch(url);
  const body = await resp.json();
  if (!resp.ok) throw new ApiError(resp.status, body.fault ?? "INTERNAL", body.detail ?? "");
  return body;
}

async function sendJson(method: string, url: string, credential: string,
                        payload?: unknown): Promise<any> {
  const resp = await fetch(url, {
    method,
    headers: {
      "Content-Type": "application/json",
      "X-Esb-Credential": credential,
    },
    body: payload === undefined ? undefined : JSON.stringify(payload),
  });
  const body = await resp.json();
  if (!resp.ok) throw new ApiError(resp.status, body.fault ?? "INTERNAL", body.detail ?? "");
  return body;
}

export class BusApi {
  constructor(public baseUrl: string) {}

  async listServices(): Promise<ServiceInfo[]> {
    return (await getJson(`${this.baseUrl}/ops/services`)).services;
  }

  async listOperations(): Promise<OperationInfo[]> {
    return (await getJson(`${this.baseUrl}/ops/operations`)).operations;
  }

  async readAudit(after = 0): Promise<AuditRecord[]> {
    return (await getJson(`${this.baseUrl}/ops/audit?after=${after}`)).records;
  }

  publishService(credential: string, descriptor: unknown): Promise<any> {
    return sendJson("POST", `${this.baseUrl}/ops/services`, credential, descriptor);
  }

  removeService(credential: string, name: string): Promise<any> {
    return sendJson("DELETE", `${this.baseUrl}/ops/services/${name}`, credential);
  }

  setServiceStatus(credential: string, name: string, status: "ACTIVE" | "FAILED"): Promise<any> {
    return sendJson("POST", `${this.baseUrl}/ops/services/${name}/status`, credential, { status });
  }

  async getDsn(): Promise<DsnDoc> {
    return getJson(`${this.baseUrl}/ops/dsn`);
  }

  putDsn(credential: string, params: Partial<DsnParams>): Promise<any> {
    return sendJson("PUT", `${this.baseUrl}/ops/dsn`, credential, params);
  }

  // -- rover-style invocation -------------------------------------------------

  private session?: string;
  clientId = "console-1";

  private async postEnvelope(xml: string): Promise<ReturnType<typeof parseResponse>> {
    const resp = await fetch(`${this.baseUrl}/esb`, {
      method: "POST",
      headers: { "Content-Type": "text/xml; charset=utf-8" },
      body: xml,
    });
    return parseResponse(await resp.text());
  }

  async bind(credential: string): Promise<string> {
    const reply = await this.postEnvelope(encodeRequest({
      messageId: newMessageId(),
      source: this.clientId,
      destination: "esb",
      operation: "Bind",
      params: [{ name: "credential", kind: "text", text: credential }],
    }));
    if (reply.status !== "OK") {
      throw new ApiError(401, reply.fault?.code ?? "AUTH_FAILED", reply.fault?.detail ?? "");
    }
    const token = reply.results.find((r) => r.name === "session")?.text;
    if (!token) throw new ApiError(502, "TRANSLATION", "bind reply carried no session");
    this.session = token;
    return token;
  }

  async invoke(credential: string, operation: string, destination: string,
               params: ParamText[]): Promise<InvokeOutcome> {
    if (!this.session) await this.bind(credential);
    const messageId = newMessageId();
    const reply = await this.postEnvelope(encodeRequest({
      messageId,
      session: this.session,
      source: this.clientId,
      destination: destination || "esb",
      operation,
      params,
    }));
    if (reply.status === "OK") {
      return { ok: true, messageId, results: reply.results };
    }
    return {
      ok: false,
      messageId,
      results: [],
      faultCode: reply.fault?.code ?? "INTERNAL",
      faultDetail: reply.fault?.detail ?? "",
    };
  }
}
