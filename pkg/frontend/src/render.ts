// DOM rendering: four panels (services, invoke, trace, chaos) plus the
// connection banner.  Pure view over ConsoleState; all data arrives
// through the store and the BusApi, nothing here invents state.

import { BusApi } from "./api.js";
import { base64ToBytes, bytesToBase64, formFields } from "./forms.js";
import type { FormValues } from "./forms.js";
import { toParams } from "./forms.js";
import { decodePpm } from "./ppm.js";
import { ConsoleState } from "./state.js";
import type { InvokeOutcome, OperationInfo } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, cls?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ConsoleView {
  private selectedOperation?: string;
  private lastOutcome?: InvokeOutcome;
  private invokeError?: string;
  private chaosNote = "";
  private fileValues: Record<string, string> = {};

  constructor(
    private root: HTMLElement,
    private state: ConsoleState,
    private api: BusApi,
    private credentials: { rover(): string; management(): string },
  ) {
    state.onChange(() => this.render());
  }

  render(): void {
    this.root.replaceChildren(
      this.banner(),
      this.servicesPanel(),
      this.invokePanel(),
      this.tracePanel(),
      this.chaosPanel(),
    );
  }

  private banner(): HTMLElement {
    const banner = el("div", `banner banner-${this.state.connection}`);
    banner.textContent = {
      live: "event stream live",
      connecting: "connecting to the bus…",
      lost: "connection to the bus lost — data may be stale, retrying",
    }[this.state.connection];
    return banner;
  }

  private servicesPanel(): HTMLElement {
    const panel = el("section", "panel services-panel");
    panel.append(el("h2", undefined, "Services"));
    const grouped = this.state.operationsByService();
    for (const service of this.state.services) {
      const failed = service.status === "FAILED";
      const box = el("div", failed ? "service failed" : "service");
      box.append(el("h3", undefined,
        `${service.service_name} · ${service.protocol} · v${service.version}`
        + (failed ? " · FAILED" : "")));
      box.append(el("div", "endpoint", service.endpoint));
      const ops = el("ul");
      for (const op of grouped.get(service.service_name) ?? []) {
        const item = el("li", failed ? "op grayed" : "op");
        const pick = el("a", undefined, op.operation) as HTMLAnchorElement;
        pick.href = "#invoke";
        pick.onclick = () => {
          this.selectedOperation = op.operation;
          this.render();
        };
        item.append(pick, el("span", "desc", ` ${op.description}`));
        ops.append(item);
      }
      box.append(ops);
      panel.append(box);
    }
    if (this.state.services.length === 0) {
      panel.append(el("p", "empty", "no services published"));
    }
    return panel;
  }

  private invokePanel(): HTMLElement {
    const panel = el("section", "panel invoke-panel");
    panel.id = "invoke";
    panel.append(el("h2", undefined, "Invoke"));
    const picker = el("select") as HTMLSelectElement;
    picker.append(new Option("choose an operation…", ""));
    for (const op of this.state.operations) {
      picker.append(new Option(`${op.operation} (${op.service})`, op.operation,
        false, op.operation === this.selectedOperation));
    }
    picker.onchange = () => {
      this.selectedOperation = picker.value || undefined;
      this.lastOutcome = undefined;
      this.invokeError = undefined;
      this.render();
    };
    panel.append(picker);
    const op = this.state.operations.find((o) => o.operation === this.selectedOperation);
    if (op) panel.append(this.invokeForm(op));
    if (this.invokeError) panel.append(el("p", "fault", this.invokeError));
    if (this.lastOutcome) panel.append(this.outcomeView(this.lastOutcome));
    return panel;
  }

  private invokeForm(op: OperationInfo): HTMLElement {
    const form = el("form", "invoke-form");
    form.append(el("p", "desc", op.description));
    const inputs = new Map<string, HTMLInputElement>();
    for (const field of formFields(op)) {
      const row = el("label", "field");
      row.append(el("span", undefined, `${field.name} (${field.kind})`));
      const input = el("input") as HTMLInputElement;
      if (field.input === "file") {
        input.type = "file";
        input.onchange = async () => {
          const file = input.files?.[0];
          if (file) {
            this.fileValues[field.name] = bytesToBase64(
              new Uint8Array(await file.arrayBuffer()));
          }
        };
      } else {
        input.type = field.input;
        if (field.step) input.step = field.step;
        if (field.placeholder) input.placeholder = field.placeholder;
      }
      inputs.set(field.name, input);
      row.append(input);
      form.append(row);
    }
    const run = el("button", undefined, "invoke") as HTMLButtonElement;
    run.type = "submit";
    form.append(run);
    form.onsubmit = async (ev) => {
      ev.preventDefault();
      const values: FormValues = {};
      for (const [name, input] of inputs) {
        values[name] = input.type === "checkbox" ? input.checked
          : input.type === "file" ? (this.fileValues[name] ?? "")
          : input.value;
      }
      try {
        const params = toParams(op, values);
        this.invokeError = undefined;
        this.lastOutcome = await this.api.invoke(
          this.credentials.rover(), op.operation, op.service, params);
      } catch (err) {
        this.invokeError = String(err instanceof Error ? err.message : err);
        this.lastOutcome = undefined;
      }
      this.render();
    };
    return form;
  }

  private outcomeView(outcome: InvokeOutcome): HTMLElement {
    const box = el("div", outcome.ok ? "outcome ok" : "outcome fault");
    if (!outcome.ok) {
      box.append(el("p", undefined, `fault ${outcome.faultCode}: ${outcome.faultDetail}`));
      return box;
    }
    for (const r of outcome.results) {
      if (r.kind === "bytes") {
        box.append(el("p", undefined, `${r.name}: ${r.text.length} base64 chars`));
        const canvas = this.thumbnail(r.text);
        if (canvas) box.append(canvas);
      } else {
        box.append(el("p", undefined, `${r.name} = ${r.text}`));
      }
    }
    if (outcome.results.length === 0) box.append(el("p", undefined, "(no results)"));
    return box;
  }

  private thumbnail(base64: string): HTMLCanvasElement | undefined {
    try {
      const image = decodePpm(base64ToBytes(base64));
      const canvas = el("canvas", "thumb") as HTMLCanvasElement;
      canvas.width = image.width;
      canvas.height = image.height;
      canvas.getContext("2d")?.putImageData(
        new ImageData(image.rgba, image.width, image.height), 0, 0);
      return canvas;
    } catch {
      return undefined; // non-image bytes: the text line above suffices
    }
  }

  private tracePanel(): HTMLElement {
    const panel = el("section", "panel trace-panel");
    panel.append(el("h2", undefined, "Pipeline trace"));
    const messageId = this.lastOutcome?.messageId
      ?? this.state.traceOrder[this.state.traceOrder.length - 1];
    if (!messageId) {
      panel.append(el("p", "empty", "no requests observed yet"));
      return panel;
    }
    panel.append(el("p", "desc", `message ${messageId}`));
    const list = el("ol", "trace");
    for (const record of this.state.trace(messageId)) {
      list.append(el("li", record.step === "FAULTED" ? "step faulted" : "step",
        `${record.step}  ${record.detail}`));
    }
    panel.append(list);
    return panel;
  }

  private chaosPanel(): HTMLElement {
    const panel = el("section", "panel chaos-panel");
    panel.append(el("h2", undefined, "Lifecycle & link"));
    if (this.chaosNote) panel.append(el("p", "note", this.chaosNote));

    const act = (label: string, fn: () => Promise<unknown>) => {
      const button = el("button", undefined, label) as HTMLButtonElement;
      button.onclick = async () => {
        try {
          await fn();
          this.chaosNote = `${label}: done`;
        } catch (err) {
          this.chaosNote = `${label}: ${err instanceof Error ? err.message : err}`;
        }
        this.render();
      };
      return button;
    };

    for (const service of this.state.services) {
      const row = el("div", "chaos-row");
      row.append(el("span", undefined, service.service_name));
      const cred = () => this.credentials.management();
      if (service.status === "FAILED") {
        row.append(act("fix", () =>
          this.api.setServiceStatus(cred(), service.service_name, "ACTIVE")));
      } else {
        row.append(act("fail", () =>
          this.api.setServiceStatus(cred(), service.service_name, "FAILED")));
      }
      row.append(act("remove", () =>
        this.api.removeService(cred(), service.service_name)));
      panel.append(row);
    }

    const publishBox = el("details");
    publishBox.append(el("summary", undefined, "publish descriptor (JSON)"));
    const textarea = el("textarea") as HTMLTextAreaElement;
    textarea.rows = 6;
    publishBox.append(textarea);
    publishBox.append(act("publish", () =>
      this.api.publishService(this.credentials.management(), JSON.parse(textarea.value))));
    panel.append(publishBox);

    panel.append(this.dsnControls());
    return panel;
  }

  private dsnControls(): HTMLElement {
    const box = el("div", "dsn");
    box.append(el("h3", undefined, "Deep-space link"));
    if (!this.state.dsn.attached || !this.state.dsn.params) {
      box.append(el("p", "empty", "no link simulator attached"));
      return box;
    }
    const params = this.state.dsn.params;
    const sliders: Array<[keyof typeof params, string, number, number]> = [
      ["one_way_delay_ms", "one-way delay (ms)", 0, 5000],
      ["jitter_ms", "jitter (ms)", 0, 2000],
      ["loss_probability", "loss probability", 0, 1],
    ];
    for (const [key, label, min, max] of sliders) {
      const row = el("label", "field");
      row.append(el("span", undefined, `${label}: ${params[key]}`));
      const input = el("input") as HTMLInputElement;
      input.type = "range";
      input.min = String(min);
      input.max = String(max);
      input.step = key === "loss_probability" ? "0.05" : "10";
      input.value = String(params[key]);
      input.onchange = async () => {
        try {
          await this.api.putDsn(this.credentials.management(),
            { [key]: Number(input.value) });
          this.state.setDsn(await this.api.getDsn());
        } catch (err) {
          this.chaosNote = `link update: ${err instanceof Error ? err.message : err}`;
          this.render();
        }
      };
      row.append(input);
      box.append(row);
    }
    const stats = this.state.dsn.stats;
    if (stats) {
      box.append(el("p", "desc",
        `uplink ${stats["uplink"].delivered}/${stats["uplink"].sent} delivered, `
        + `downlink ${stats["downlink"].delivered}/${stats["downlink"].sent} delivered`));
    }
    return box;
  }
}
