// Canonical XML envelope codec, matching the bus grammar byte for byte
// on the request side (UTF-8, LF, 2-space indent, fixed namespace).

export interface ParamText {
  name: string;
  kind: string;
  text: string; // canonical text form; bytes are base64
}

export interface RequestFields {
  messageId: string;
  session?: string;
  source: string;
  destination: string;
  operation: string;
  params: ParamText[];
}

export interface ParsedResponse {
  messageId: string;
  correlationId: string;
  status: "OK" | "FAULT";
  results: ParamText[];
  fault?: { code: string; detail: string };
}

const NAMESPACE = "urn:rover-esb:1";

function escapeText(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function escapeAttr(s: string): string {
  return escapeText(s).replace(/"/g, "&quot;");
}

function unescape(s: string): string {
  return s
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&apos;/g, "'")
    .replace(/&#(\d+);/g, (_, n) => String.fromCodePoint(parseInt(n, 10)))
    .replace(/&#x([0-9a-fA-F]+);/g, (_, n) => String.fromCodePoint(parseInt(n, 16)))
    .replace(/&amp;/g, "&");
}

export function encodeRequest(fields: RequestFields): string {
  const lines = [`<Envelope xmlns="${NAMESPACE}">`, "  <Header>"];
  const header = (tag: string, value: string) =>
    lines.push(`    <${tag}>${escapeText(value)}</${tag}>`);
  header("MessageId", fields.messageId);
  if (fields.session !== undefined) header("Session", fields.session);
  header("Source", fields.source);
  header("Destination", fields.destination);
  header("Operation", fields.operation);
  lines.push("  </Header>");
  if (fields.params.length === 0) {
    lines.push("  <Body/>");
  } else {
    lines.push("  <Body>");
    for (const p of fields.params) {
      lines.push(
        `    <Param name="${escapeAttr(p.name)}" kind="${p.kind}">${escapeText(p.text)}</Param>`,
      );
    }
    lines.push("  </Body>");
  }
  lines.push("</Envelope>");
  return lines.join("\n");
}

// -- response parsing ---------------------------------------------------------
//
// The bus emits a closed grammar (no comments, CDATA or prefixes), so a
// small scanner is enough and works identically in the browser and node.

interface Element {
  tag: string;
  attrs: Record<string, string>;
  children: Element[];
  text: string;
}

function parseDocument(xml: string): Element {
  const tokens = xml.matchAll(
    /<([A-Za-z][\w.-]*)((?:\s+[A-Za-z][\w.-]*="[^"]*")*)\s*(\/?)>|<\/([A-Za-z][\w.-]*)\s*>|([^<]+)/g,
  );
  const root: Element = { tag: "", attrs: {}, children: [], text: "" };
  const stack: Element[] = [root];
  for (const t of tokens) {
    const top = stack[stack.length - 1];
    if (t[1] !== undefined) {
      const el: Element = { tag: t[1], attrs: {}, children: [], text: "" };
      for (const a of (t[2] ?? "").matchAll(/([A-Za-z][\w.-]*)="([^"]*)"/g)) {
        el.attrs[a[1]] = unescape(a[2]);
      }
      top.children.push(el);
      if (t[3] !== "/") stack.push(el);
    } else if (t[4] !== undefined) {
      if (stack.length < 2 || top.tag !== t[4]) throw new Error(`mismatched </${t[4]}>`);
      stack.pop();
    } else if (t[5] !== undefined) {
      top.text += unescape(t[5]);
    }
  }
  if (stack.length !== 1) throw new Error(`unclosed <${stack[stack.length - 1].tag}>`);
  const envelope = root.children.find((c) => c.tag === "Envelope");
  if (!envelope || envelope.attrs["xmlns"] !== NAMESPACE) {
    throw new Error("not a bus envelope");
  }
  return envelope;
}

function child(el: Element, tag: string): Element | undefined {
  return el.children.find((c) => c.tag === tag);
}

export function parseResponse(xml: string): ParsedResponse {
  const envelope = parseDocument(xml);
  const header = child(envelope, "Header");
  if (!header) throw new Error("missing Header");
  const field = (tag: string) => child(header, tag)?.text;
  const status = field("Status");
  if (status !== "OK" && status !== "FAULT") throw new Error(`bad Status ${status}`);
  const body = child(envelope, "Body");
  const out: ParsedResponse = {
    messageId: field("MessageId") ?? "",
    correlationId: field("CorrelationId") ?? "",
    status,
    results: [],
  };
  if (!body) return out;
  if (status === "FAULT") {
    const fault = child(body, "Fault");
    if (!fault) throw new Error("FAULT response without Fault element");
    out.fault = { code: fault.attrs["code"] ?? "INTERNAL", detail: fault.text };
    return out;
  }
  for (const el of body.children) {
    if (el.tag !== "Result") throw new Error(`unexpected ${el.tag} in Body`);
    const name = el.attrs["name"];
    const kind = el.attrs["kind"];
    if (!name || !kind) throw new Error("Result missing name/kind");
    out.results.push({ name, kind, text: el.text });
  }
  return out;
}

export function newMessageId(): string {
  const bytes = new Uint8Array(16);
  crypto.getRandomValues(bytes);
  bytes[6] = (bytes[6] & 0x0f) | 0x40;
  bytes[8] = (bytes[8] & 0x3f) | 0x80;
  const hex = Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
  return `${hex.slice(0, 8)}-${hex.slice(8, 12)}-${hex.slice(12, 16)}-${hex.slice(16, 20)}-${hex.slice(20)}`;
}
