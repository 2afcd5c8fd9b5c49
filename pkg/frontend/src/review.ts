/**
 * The review queue: AI-labeled annotations waiting for a human verdict.
 *
 * Only AiLabeled annotations enter the queue, ordered oldest-label-first
 * so teams work through proposals predictably. Verdicts advance the
 * queue optimistically; if the server refuses (someone else's verdict
 * landed first, or the annotation moved on), the item is restored to the
 * head of the queue and a banner explains what happened.
 */

import { ApiError, BoxlabApi } from './api';
import type { Annotation, ParsedLabel, TaxonomyPayload, VerdictBody, VerdictKind } from './api';

export interface ReviewItem {
  annotation: Annotation;
  label: ParsedLabel;
  /** Taxonomy tier of the fine label (fallback: base), for the badge. */
  tier: number | null;
  /** When the current AI label was applied — the queue sort key. */
  labeledAt: string;
}

/** Timestamp of the latest AiLabelApplied event (annotations enter on labeling). */
function labeledAt(annotation: Annotation): string {
  for (let i = annotation.history.length - 1; i >= 0; i--) {
    const event = annotation.history[i];
    if (event && event.kind === 'AiLabelApplied') {
      return event.ts;
    }
  }
  return annotation.history[annotation.history.length - 1]?.ts ?? '';
}

/** Look a label up in the project taxonomy: direct entry first, then synonym. */
export function tierOf(taxonomy: TaxonomyPayload | null, label: string | null): number | null {
  if (!taxonomy || !label) {
    return null;
  }
  const key = label.trim().toLowerCase();
  const direct = taxonomy.labels[key];
  if (direct) {
    return direct.tier;
  }
  const canonical = taxonomy.synonyms[key];
  if (canonical) {
    return taxonomy.labels[canonical]?.tier ?? null;
  }
  return null;
}

export function toReviewItem(annotation: Annotation, taxonomy: TaxonomyPayload | null): ReviewItem {
  if (annotation.status !== 'AiLabeled' || annotation.ai_label === null) {
    throw new Error(`only AiLabeled annotations enter the review queue, got ${annotation.status}`);
  }
  const label = annotation.ai_label;
  const tier = tierOf(taxonomy, label.fine) ?? tierOf(taxonomy, label.base);
  return { annotation, label, tier, labeledAt: labeledAt(annotation) };
}

export interface VerdictResult {
  ok: boolean;
  /** Set when the verdict was rolled back; also mirrored in `banner`. */
  error?: ApiError;
}

export class ReviewQueue {
  private items: ReviewItem[] = [];
  private taxonomy: TaxonomyPayload | null = null;
  /** Human-readable notice about the last rollback, cleared on the next action. */
  banner: string | null = null;

  constructor(
    private readonly api: BoxlabApi,
    private readonly projectId: string,
  ) {}

  /** Fetch the queue: AiLabeled only, oldest label first. */
  async load(): Promise<void> {
    const [detail, annotations] = await Promise.all([
      this.api.getProject(this.projectId),
      this.api.listAnnotations(this.projectId, 'AiLabeled'),
    ]);
    this.taxonomy = detail.taxonomy;
    this.items = annotations
      .map((a) => toReviewItem(a, this.taxonomy))
      .sort((a, b) => (a.labeledAt < b.labeledAt ? -1 : a.labeledAt > b.labeledAt ? 1 : 0));
  }

  get length(): number {
    return this.items.length;
  }

  get current(): ReviewItem | null {
    return this.items[0] ?? null;
  }

  /** A snapshot of the queue, head first. */
  list(): readonly ReviewItem[] {
    return this.items.slice();
  }

  /** Move the head to the back without a verdict. */
  skip(): void {
    this.banner = null;
    const head = this.items.shift();
    if (head) {
      this.items.push(head);
    }
  }

  /**
   * Submit a verdict for the head item. The queue advances immediately;
   * a conflict or illegal transition restores the item to the head and
   * raises the banner. Other failures (network, server) also roll back.
   */
  async submit(verdict: VerdictKind, text?: string): Promise<VerdictResult> {
    const item = this.items[0];
    if (!item) {
      return { ok: false };
    }
    this.banner = null;

    const body: VerdictBody = { verdict };
    if (verdict === 'Correct') {
      if (!text || !text.trim()) {
        this.banner = 'Correct needs a replacement label';
        return { ok: false };
      }
      body.label = text;
    } else if (verdict === 'Flag') {
      body.reason = text ?? '';
    }

    this.items.shift(); // optimistic advance
    try {
      await this.api.submitVerdict(item.annotation.id, body);
      return { ok: true };
    } catch (error) {
      this.items.unshift(item); // rollback: head of the queue again
      if (error instanceof ApiError) {
        this.banner = error.isConflict
          ? `Conflict: ${error.message} — someone else got there first; item kept for re-review`
          : `${error.type}: ${error.message}`;
        return { ok: false, error };
      }
      this.banner = error instanceof Error ? error.message : String(error);
      throw error;
    }
  }
}
