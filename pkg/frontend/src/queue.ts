/** Ordered label delivery with retries and pair-id idempotency.
 *
 * Choices are appended to a FIFO queue drained by a single in-flight
 * request. Transport failures keep the head item queued and retry after
 * a delay, so going offline loses nothing. The pair id doubles as the
 * idempotency key: the queue never accepts the same pair twice, and a
 * server "AlreadyLabeled" rejection (a retry whose first attempt did
 * land) counts as delivered. A "Disqualified" rejection halts the queue
 * permanently.
 */

import { ApiError, type LabelAck } from "./api.js";
import type { ChoiceAction } from "./state.js";

export interface QueueEvents {
  onDelivered?: (pairId: string, ack: LabelAck | null) => void;
  onDropped?: (pairId: string, error: ApiError) => void;
  onTerminal?: (message: string) => void;
}

export interface QueueOptions {
  retryDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
  events?: QueueEvents;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export class LabelQueue {
  private readonly items: ChoiceAction[] = [];
  private readonly seen = new Set<string>();
  private readonly retryDelayMs: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly events: QueueEvents;
  private draining: Promise<void> | null = null;
  private terminal = false;

  constructor(
    private readonly submit: (action: ChoiceAction) => Promise<LabelAck>,
    options: QueueOptions = {},
  ) {
    this.retryDelayMs = options.retryDelayMs ?? 1000;
    this.sleep = options.sleep ?? defaultSleep;
    this.events = options.events ?? {};
  }

  get pending(): number {
    return this.items.length;
  }

  get halted(): boolean {
    return this.terminal;
  }

  /** Queue an action; false if this pair was already queued once. */
  enqueue(action: ChoiceAction): boolean {
    if (this.terminal || this.seen.has(action.pairId)) return false;
    this.seen.add(action.pairId);
    this.items.push(action);
    if (this.draining === null) {
      this.draining = this.drain().finally(() => {
        this.draining = null;
      });
    }
    return true;
  }

  /** Resolves when the queue is empty or halted. */
  flush(): Promise<void> {
    return this.draining ?? Promise.resolve();
  }

  private async drain(): Promise<void> {
    while (this.items.length > 0 && !this.terminal) {
      const head = this.items[0]!;
      try {
        const ack = await this.submit(head);
        this.items.shift();
        this.events.onDelivered?.(head.pairId, ack);
      } catch (error) {
        if (error instanceof ApiError) {
          if (error.code === "AlreadyLabeled") {
            this.items.shift();
            this.events.onDelivered?.(head.pairId, null);
          } else if (error.code === "Disqualified") {
            this.terminal = true;
            this.events.onTerminal?.(error.message);
          } else {
            this.items.shift();
            this.events.onDropped?.(head.pairId, error);
          }
        } else {
          await this.sleep(this.retryDelayMs);
        }
      }
    }
  }
}
