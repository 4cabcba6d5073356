/** Client-side batch state: a forward-only cursor over served pairs.
 *
 * The cursor never moves backward and there is deliberately no API to
 * revisit a pair; each pair emits at most one choice. Locking (after a
 * disqualification notice) is terminal.
 */

import type { Label, PairDescriptor } from "./api.js";

export type Phase = "labeling" | "complete" | "locked";

export interface ChoiceAction {
  pairId: string;
  label: Label;
}

export interface Progress {
  done: number;
  total: number;
  /** 1-based position over total, e.g. "1/20" on a fresh batch of 20. */
  text: string;
}

export class BatchSession {
  private readonly pairs: PairDescriptor[];
  private cursor = 0;
  private readonly chosen = new Set<string>();
  private terminal = false;

  constructor(pairs: PairDescriptor[]) {
    this.pairs = [...pairs];
  }

  get phase(): Phase {
    if (this.terminal) return "locked";
    return this.cursor < this.pairs.length ? "labeling" : "complete";
  }

  /** The pair awaiting a choice, or null when done or locked. */
  get current(): PairDescriptor | null {
    if (this.phase !== "labeling") return null;
    return this.pairs[this.cursor] ?? null;
  }

  get progress(): Progress {
    const total = this.pairs.length;
    const done = this.cursor;
    const position = Math.min(done + 1, total);
    return { done, total, text: total === 0 ? "0/0" : `${position}/${total}` };
  }

  /** Record a choice for the current pair and advance.
   *
   * Returns the action to submit, or null when there is nothing to label
   * (completed, locked, or the pair somehow already chosen). Each pair id
   * yields an action at most once.
   */
  choose(label: Label): ChoiceAction | null {
    const pair = this.current;
    if (pair === null || this.chosen.has(pair.pair_id)) return null;
    this.chosen.add(pair.pair_id);
    this.cursor += 1;
    return { pairId: pair.pair_id, label };
  }

  /** Terminal lockout; never reversed. */
  lock(): void {
    this.terminal = true;
  }
}
