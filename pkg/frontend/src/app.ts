/**
 * The annotator workspace: project picker, image strip, drawing canvas,
 * review queue, and the stats panel, wired straight to the /v1 API.
 *
 * Plain DOM, no framework. Every piece of page state is rebuilt from the
 * server on load — reloading the page loses nothing but scroll position.
 */

import { ApiError, BoxlabApi } from './api';
import type { Annotation, Box, ImageRecord, ProjectDetail } from './api';
import { AnnotatorCanvas } from './canvas';
import { tierBadge } from './format';
import { createReviewKeyHandler } from './keyboard';
import { ReviewQueue } from './review';
import { SHORTCUTS } from './keyboard';
import { computeCost, costLines, shapeStats } from './stats';
import type { CostParams } from './stats';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function freshIdempotencyKey(): string {
  const c = globalThis.crypto as Crypto | undefined;
  if (c?.randomUUID) {
    return c.randomUUID();
  }
  return `job-${Date.now()}-${Math.floor(Math.random() * 1e9)}`;
}

export class App {
  private readonly api: BoxlabApi;
  private project: ProjectDetail | null = null;
  private images: ImageRecord[] = [];
  private annotations: Annotation[] = [];
  private queue: ReviewQueue | null = null;
  private canvas!: AnnotatorCanvas;
  private correcting = false;
  private helpVisible = false;
  private inFlight = 0;
  private idleResolvers: Array<() => void> = [];

  // page regions
  private readonly projectSelect = el('select', 'project-select');
  private readonly imageStrip = el('div', 'image-strip');
  private readonly canvasEl = el('canvas', 'annotator-canvas');
  private readonly canvasNotice = el('div', 'canvas-notice');
  private readonly labelButton = el('button', 'label-button', 'Run AI labeling');
  private readonly reviewPanel = el('div', 'review-panel');
  private readonly statsPanel = el('div', 'stats-panel');
  private readonly costPanel = el('div', 'cost-panel');
  private readonly costInputs: Record<keyof CostParams, HTMLInputElement> = {
    nItems: el('input'),
    humanFullSeconds: el('input'),
    humanBoxSeconds: el('input'),
    wagePerHour: el('input'),
    apiCostPerItem: el('input'),
  };

  constructor(
    private readonly root: HTMLElement,
    api?: BoxlabApi,
  ) {
    this.api = api ?? new BoxlabApi({ annotatorId: 'annotator' });
    this.buildLayout();
    this.canvas = new AnnotatorCanvas(this.canvasEl, {
      onBoxDrawn: (box) => this.track(this.submitBox(box)),
      imageUrl: (id) => this.api.imageContentUrl(id),
    });
    document.addEventListener('keydown', this.keyHandler);
  }

  dispose(): void {
    document.removeEventListener('keydown', this.keyHandler);
    this.canvas.dispose();
  }

  /** Resolves once every in-flight action has settled (for scripting/tests). */
  idle(): Promise<void> {
    if (this.inFlight === 0) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.idleResolvers.push(resolve));
  }

  private track<T>(work: Promise<T>): Promise<T | undefined> {
    this.inFlight += 1;
    return work
      .catch((error) => {
        this.canvasNotice.textContent = error instanceof Error ? error.message : String(error);
        return undefined;
      })
      .finally(() => {
        this.inFlight -= 1;
        if (this.inFlight === 0) {
          const resolvers = this.idleResolvers;
          this.idleResolvers = [];
          resolvers.forEach((resolve) => resolve());
        }
      });
  }

  async start(): Promise<void> {
    await this.track(this.loadProjects());
  }

  // --- layout ------------------------------------------------------------

  private buildLayout(): void {
    const header = el('header', 'top-bar');
    header.append(el('span', 'brand', 'boxlab'), this.projectSelect, this.labelButton);

    this.canvasEl.width = 800;
    this.canvasEl.height = 600;
    const workspace = el('main', 'workspace');
    const canvasWrap = el('section', 'canvas-wrap');
    canvasWrap.append(this.canvasEl, this.canvasNotice);
    const side = el('aside', 'side-panel');
    side.append(this.reviewPanel, this.statsPanel, this.costPanel);
    workspace.append(this.imageStrip, canvasWrap, side);

    this.root.replaceChildren(header, workspace);

    this.projectSelect.addEventListener('change', () => {
      const id = this.projectSelect.value;
      if (id) {
        this.track(this.selectProject(id));
      }
    });
    this.labelButton.addEventListener('click', () => {
      this.track(this.runLabelJob());
    });
    for (const input of Object.values(this.costInputs)) {
      input.type = 'number';
      input.min = '0';
      input.addEventListener('input', () => this.renderCost());
    }
  }

  // --- data flows ----------------------------------------------------------

  private async loadProjects(): Promise<void> {
    const projects = await this.api.listProjects();
    this.projectSelect.replaceChildren(
      new Option('— pick a project —', ''),
      ...projects.map((p) => new Option(`${p.name} (${p.image_count} images)`, p.id)),
    );
    if (projects.length === 1 && projects[0]) {
      this.projectSelect.value = projects[0].id;
      await this.selectProject(projects[0].id);
    }
  }

  async selectProject(projectId: string): Promise<void> {
    this.project = await this.api.getProject(projectId);
    this.queue = new ReviewQueue(this.api, projectId);
    this.images = await this.api.listImages(projectId);
    this.renderImageStrip();
    const first = this.images[0] ?? null;
    this.canvas.setImage(first);
    await this.refreshAnnotations();
    await this.queue.load();
    this.renderReview();
    await this.refreshStats();
  }

  private async refreshAnnotations(): Promise<void> {
    if (!this.project) {
      return;
    }
    this.annotations = await this.api.listAnnotations(this.project.id);
    const active = this.canvas.activeImage;
    this.canvas.setAnnotations(
      active ? this.annotations.filter((a) => a.image_id === active.id) : [],
    );
  }

  private async submitBox(box: Box): Promise<void> {
    const image = this.canvas.activeImage;
    if (!this.project || !image) {
      return;
    }
    this.canvasNotice.textContent = '';
    try {
      await this.api.createAnnotation(this.project.id, { image_id: image.id, box });
    } catch (error) {
      if (error instanceof ApiError) {
        // rejected boxes are surfaced inline, next to the canvas
        this.canvasNotice.textContent = `box rejected: ${error.message}`;
        return;
      }
      throw error;
    }
    await this.refreshAnnotations();
    await this.refreshStats();
  }

  async runLabelJob(): Promise<void> {
    if (!this.project) {
      return;
    }
    this.labelButton.disabled = true;
    try {
      const job = await this.api.submitLabelJob(this.project.id, {
        filter: { status: 'BoxDrawn' },
        idempotency_key: freshIdempotencyKey(),
      });
      const settled = await this.api.waitForJob(job.job_id);
      this.canvasNotice.textContent =
        settled.state === 'Done'
          ? `labeling done: ${settled.outcomes.filter((o) => o.ok).length} of ${settled.outcomes.length} labeled`
          : `labeling failed: ${settled.error ?? 'unknown error'}`;
      await this.refreshAnnotations();
      await this.queue?.load();
      this.renderReview();
      await this.refreshStats();
    } finally {
      this.labelButton.disabled = false;
    }
  }

  private async refreshStats(): Promise<void> {
    if (!this.project) {
      return;
    }
    const payload = await this.api.getStats(this.project.id);
    const view = shapeStats(payload);

    const counts = el('div', 'status-counts');
    counts.append(
      ...view.statusCounts.map((c) => {
        const line = el('div', `count-${c.status}`);
        line.textContent = `${c.status}: ${c.count}`;
        return line;
      }),
    );

    const accuracy = el('div', 'accuracy');
    accuracy.textContent = view.accuracyText
      ? `accuracy: ${view.accuracyText} (${view.accuracyDetail})`
      : 'accuracy: no ground truth loaded';

    const agreement = el('div', 'agreement');
    agreement.append(
      el('div', 'agreement-title', 'human agreement with AI labels'),
      ...view.agreement.map((row) =>
        el(
          'div',
          'agreement-row',
          `${row.className}: ${row.rateText} accepted (${row.accepted}✓ ${row.corrected}✗)`,
        ),
      ),
    );
    if (view.agreement.length === 0) {
      agreement.append(el('div', 'agreement-empty', 'no reviewed labels yet'));
    }

    this.statsPanel.replaceChildren(
      el('h2', undefined, `annotations: ${view.total}`),
      counts,
      accuracy,
      agreement,
    );

    if (!this.costInputs.nItems.value) {
      this.costInputs.nItems.value = String(payload.cost_inputs.n_items);
      this.costInputs.humanFullSeconds.value = '30';
      this.costInputs.humanBoxSeconds.value = '10';
      this.costInputs.wagePerHour.value = '18';
      this.costInputs.apiCostPerItem.value = '0.0002';
    }
    this.renderCost();
  }

  private renderCost(): void {
    const read = (input: HTMLInputElement) => {
      const value = Number(input.value);
      return Number.isFinite(value) && value >= 0 ? value : 0;
    };
    const report = computeCost({
      nItems: read(this.costInputs.nItems),
      humanFullSeconds: read(this.costInputs.humanFullSeconds),
      humanBoxSeconds: read(this.costInputs.humanBoxSeconds),
      wagePerHour: read(this.costInputs.wagePerHour),
      apiCostPerItem: read(this.costInputs.apiCostPerItem),
    });

    const form = el('div', 'cost-form');
    const labels: Array<[keyof CostParams, string]> = [
      ['nItems', 'items'],
      ['humanFullSeconds', 'sec/item alone'],
      ['humanBoxSeconds', 'sec/item boxing'],
      ['wagePerHour', 'wage $/h'],
      ['apiCostPerItem', 'api $/item'],
    ];
    for (const [key, text] of labels) {
      const row = el('label', 'cost-input-row', `${text} `);
      row.append(this.costInputs[key]);
      form.append(row);
    }

    const lines = el('div', 'cost-lines');
    lines.append(
      ...costLines(report).map((line) =>
        el('div', `cost-${line.label.replace(/[^a-z]+/g, '-')}`, `${line.label}: ${line.value}`),
      ),
    );

    this.costPanel.replaceChildren(el('h2', undefined, 'cost model'), form, lines);
  }

  // --- image strip -----------------------------------------------------------

  private renderImageStrip(): void {
    this.imageStrip.replaceChildren(
      ...this.images.map((record) => {
        const entry = el('button', 'image-entry', record.source_name);
        entry.addEventListener('click', () => {
          this.canvas.setImage(record);
          this.canvas.setAnnotations(this.annotations.filter((a) => a.image_id === record.id));
        });
        return entry;
      }),
    );
  }

  // --- review queue ------------------------------------------------------------

  private correctionInput = el('input', 'correction-input');

  private renderReview(): void {
    const queue = this.queue;
    const head = queue?.current ?? null;

    const title = el('h2', undefined, `review queue (${queue?.length ?? 0})`);
    const banner = el('div', 'review-banner', queue?.banner ?? '');
    banner.hidden = !queue?.banner;

    const body = el('div', 'review-body');
    if (head) {
      const label = head.label;
      const badge = tierBadge(head.tier);
      body.append(
        el('div', 'review-label', label.raw),
        el(
          'div',
          'review-breakdown',
          `${label.fine}${label.base ? ` — ${label.base}` : ''}${badge ? ` ${badge}` : ''}`,
        ),
      );
    } else {
      body.append(el('div', 'review-empty', 'nothing to review'));
    }

    const controls = el('div', 'review-controls');
    const accept = el('button', 'verdict-accept', 'Accept (a)');
    const correct = el('button', 'verdict-correct', 'Correct (c)');
    const flag = el('button', 'verdict-flag', 'Flag (f)');
    const skip = el('button', 'verdict-skip', 'Skip (s)');
    accept.addEventListener('click', () => this.track(this.submitVerdict('Accept')));
    correct.addEventListener('click', () => this.beginCorrect());
    flag.addEventListener('click', () => this.track(this.submitVerdict('Flag')));
    skip.addEventListener('click', () => {
      queue?.skip();
      this.renderReview();
    });
    controls.append(accept, correct, flag, skip);

    this.correctionInput.placeholder = 'replacement label, Enter to submit';
    this.correctionInput.hidden = !this.correcting;

    const help = el('div', 'shortcut-help');
    help.hidden = !this.helpVisible;
    help.append(...SHORTCUTS.map((s) => el('div', undefined, `${s.key} — ${s.does}`)));

    this.reviewPanel.replaceChildren(title, banner, body, controls, this.correctionInput, help);
  }

  private beginCorrect(): void {
    if (!this.queue?.current) {
      return;
    }
    this.correcting = true;
    this.renderReview();
    this.correctionInput.focus();
  }

  private async submitVerdict(kind: 'Accept' | 'Flag'): Promise<void> {
    if (!this.queue) {
      return;
    }
    await this.queue.submit(kind, kind === 'Flag' ? 'flagged from review queue' : undefined);
    this.renderReview();
    await this.refreshAnnotations();
    await this.refreshStats();
  }

  private async submitCorrection(): Promise<void> {
    if (!this.queue) {
      return;
    }
    const text = this.correctionInput.value;
    const result = await this.queue.submit('Correct', text);
    if (result.ok) {
      this.correcting = false;
      this.correctionInput.value = '';
    }
    this.renderReview();
    await this.refreshAnnotations();
    await this.refreshStats();
  }

  private readonly keyHandler = createReviewKeyHandler({
    accept: () => this.track(this.submitVerdict('Accept')),
    beginCorrect: () => this.beginCorrect(),
    submitCorrect: () => this.track(this.submitCorrection()),
    cancelCorrect: () => {
      this.correcting = false;
      this.correctionInput.value = '';
      this.renderReview();
    },
    flag: () => this.track(this.submitVerdict('Flag')),
    skip: () => {
      this.queue?.skip();
      this.renderReview();
    },
    toggleHelp: () => {
      this.helpVisible = !this.helpVisible;
      this.renderReview();
    },
    isCorrecting: () => this.correcting,
  });
}

export function mountApp(root: HTMLElement, api?: BoxlabApi): App {
  const app = new App(root, api);
  void app.start();
  return app;
}
