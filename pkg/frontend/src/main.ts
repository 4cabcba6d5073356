/** Browser entry point: wires the API client, batch state, and label
 * queue to the page.
 *
 * Screens: login, labeling (side-by-side images, four choices, progress),
 * completion (fetch next batch), and a terminal lockout. The instruction
 * panel stays visible throughout. Labeling is blocked until both images
 * load; a failed image shows a retry control. Keyboard: 1 = left better,
 * 2 = right better, B = both legible, N = neither.
 */

import { ApiClient, ApiError, type Label, type PairDescriptor } from "./api.js";
import { LabelQueue } from "./queue.js";
import { BatchSession } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function show(id: string, visible: boolean): void {
  el(id).hidden = !visible;
}

const KEY_LABELS: Record<string, Label> = {
  "1": "L1",
  "2": "L2",
  b: "BL",
  n: "NL",
};

class App {
  private readonly api: ApiClient;
  private token = "";
  private session: BatchSession | null = null;
  private queue: LabelQueue | null = null;
  private imagesReady = false;

  constructor(baseUrl: string) {
    this.api = new ApiClient(baseUrl);
  }

  bind(): void {
    el<HTMLFormElement>("login-form").addEventListener("submit", (event) => {
      event.preventDefault();
      const id = el<HTMLInputElement>("annotator-id").value.trim();
      if (id) void this.start(id);
    });
    const buttons: Array<[string, Label]> = [
      ["choose-left", "L1"],
      ["choose-right", "L2"],
      ["choose-both", "BL"],
      ["choose-neither", "NL"],
    ];
    for (const [id, label] of buttons) {
      el(id).addEventListener("click", () => this.choose(label));
    }
    el("img-left").addEventListener("click", () => this.choose("L1"));
    el("img-right").addEventListener("click", () => this.choose("L2"));
    el("next-batch").addEventListener("click", () => void this.loadBatch());
    el("retry-images").addEventListener("click", () => this.renderPair());
    document.addEventListener("keydown", (event) => {
      const label = KEY_LABELS[event.key.toLowerCase()];
      if (label && !event.repeat) this.choose(label);
    });
  }

  private async start(annotatorId: string): Promise<void> {
    try {
      const response = await this.api.createSession(annotatorId);
      this.token = response.token;
      if (response.annotator.status === "disqualified") {
        this.lockout("This account has been disqualified.");
        return;
      }
      this.queue = new LabelQueue(
        (action) => this.api.submitLabel(this.token, action.pairId, action.label),
        {
          events: {
            onTerminal: (message) => this.lockout(message),
            onDropped: (pairId, error) =>
              this.setStatus(`label for ${pairId} rejected: ${error.message}`),
          },
        },
      );
      show("login", false);
      await this.loadBatch();
    } catch (error) {
      this.setStatus(describe(error));
    }
  }

  private async loadBatch(): Promise<void> {
    this.setStatus("");
    try {
      const batch = await this.api.getBatch(this.token);
      this.session = new BatchSession(batch.pairs);
      this.render();
    } catch (error) {
      if (error instanceof ApiError && error.code === "Disqualified") {
        this.lockout(error.message);
        return;
      }
      if (error instanceof ApiError && error.code === "NoOpenRound") {
        this.session = new BatchSession([]);
        this.render();
        this.setStatus("No round is open right now; check back later.");
        return;
      }
      this.setStatus(describe(error));
    }
  }

  private choose(label: Label): void {
    if (!this.session || !this.queue || !this.imagesReady) return;
    const action = this.session.choose(label);
    if (!action) return;
    this.queue.enqueue(action);
    this.render();
  }

  private render(): void {
    const session = this.session;
    if (!session) return;
    const phase = session.phase;
    show("labeling", phase === "labeling");
    show("complete", phase === "complete");
    show("locked", phase === "locked");
    el("progress").textContent = session.progress.text;
    if (phase === "labeling") this.renderPair();
  }

  private renderPair(): void {
    const pair = this.session?.current;
    if (!pair) return;
    this.imagesReady = false;
    this.setChoicesEnabled(false);
    show("image-error", false);
    const left = el<HTMLImageElement>("img-left");
    const right = el<HTMLImageElement>("img-right");
    void this.loadImages(pair, left, right);
  }

  private async loadImages(
    pair: PairDescriptor,
    left: HTMLImageElement,
    right: HTMLImageElement,
  ): Promise<void> {
    const attempt = Date.now();
    try {
      await Promise.all([
        loadInto(left, this.api.imageUrl(pair.img1) + `?t=${attempt}`),
        loadInto(right, this.api.imageUrl(pair.img2) + `?t=${attempt}`),
      ]);
      if (this.session?.current?.pair_id === pair.pair_id) {
        this.imagesReady = true;
        this.setChoicesEnabled(true);
      }
    } catch {
      show("image-error", true);
    }
  }

  private setChoicesEnabled(enabled: boolean): void {
    for (const id of ["choose-left", "choose-right", "choose-both", "choose-neither"]) {
      el<HTMLButtonElement>(id).disabled = !enabled;
    }
  }

  private lockout(message: string): void {
    this.session?.lock();
    show("login", false);
    show("labeling", false);
    show("complete", false);
    show("locked", true);
    el("locked-message").textContent = message;
  }

  private setStatus(message: string): void {
    el("status").textContent = message;
  }
}

function loadInto(img: HTMLImageElement, url: string): Promise<void> {
  return new Promise((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error(`failed to load ${url}`));
    img.src = url;
  });
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return error instanceof Error ? error.message : String(error);
}

const params = new URLSearchParams(window.location.search);
const app = new App(params.get("service") ?? window.location.origin);
app.bind();
