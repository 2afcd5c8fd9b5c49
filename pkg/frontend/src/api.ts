/**
 * Typed client for the /v1 annotation service.
 *
 * The UI is a pure client of this API: no state survives a reload except
 * through the server. Everything is injectable (base URL, fetch, annotator
 * identity) so components can run against a stub in tests and the real
 * service in production.
 */

export interface ProjectSummary {
  id: string;
  name: string;
  created_at: string;
  image_count: number;
  annotation_count: number;
}

export interface TaxonomyEntry {
  tier: number;
  parent: string | null;
}

export interface TaxonomyPayload {
  labels: Record<string, TaxonomyEntry>;
  synonyms: Record<string, string>;
}

export interface ProjectDetail extends ProjectSummary {
  taxonomy: TaxonomyPayload;
}

export interface ImageRecord {
  id: string;
  source_name: string;
  width: number;
  height: number;
  content_hash: string;
  format: string;
}

export interface Box {
  x: number;
  y: number;
  width: number;
  height: number;
}

export type RegionPayload = { kind: 'WholeImage' } | ({ kind: 'Box' } & Box);

export interface ParsedLabel {
  raw: string;
  fine: string;
  base: string | null;
}

export type AnnotationStatus = 'BoxDrawn' | 'AiLabeled' | 'Verified' | 'Corrected' | 'Flagged';

export interface AnnotationEvent {
  kind: string;
  actor: { kind: 'Human' | 'Ai'; id: string };
  ts: string;
  label?: ParsedLabel;
  text?: string;
}

export interface Annotation {
  id: string;
  image_id: string;
  region: RegionPayload;
  status: AnnotationStatus;
  ai_label: ParsedLabel | null;
  human_label: string | null;
  history: AnnotationEvent[];
}

export type VerdictKind = 'Accept' | 'Correct' | 'Flag';

export interface VerdictBody {
  verdict: VerdictKind;
  label?: string;
  reason?: string;
}

export type JobState = 'Queued' | 'Running' | 'Done' | 'Failed';

export interface LabelJob {
  job_id: string;
  project_id: string;
  filter: Record<string, unknown>;
  state: JobState;
  outcomes: Array<{ annotation_id: string; ok: boolean; error: string | null }>;
  error: string | null;
  idempotency_key: string;
}

export interface AccuracyPayload {
  total: number;
  correct: number;
  accuracy: number;
  display: string;
  unlabeled: number;
  per_class: Record<string, { total: number; correct: number }>;
}

export interface AgreementPayload {
  [className: string]: { accepted: number; corrected: number; acceptance_rate: number };
}

export interface StatsPayload {
  counts: Record<string, number> & { total: number };
  agreement: AgreementPayload;
  accuracy: AccuracyPayload | null;
  cost_inputs: { n_items: number; n_ai_labeled: number; n_reviewed: number };
}

/** Server error envelope: {"error": {"type": ..., "message": ...}}. */
export class ApiError extends Error {
  constructor(
    readonly type: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }

  /** True for the losses a review verdict can hit when someone else got there first. */
  get isConflict(): boolean {
    return (
      this.status === 409 ||
      this.type === 'IllegalTransitionError' ||
      this.message.startsWith('Conflict:')
    );
  }
}

export interface ApiOptions {
  baseUrl?: string;
  annotatorId?: string;
  fetchImpl?: typeof fetch;
}

export class BoxlabApi {
  readonly baseUrl: string;
  annotatorId: string;
  private readonly fetchImpl: typeof fetch;

  constructor(options: ApiOptions = {}) {
    this.baseUrl = (options.baseUrl ?? '').replace(/\/$/, '');
    this.annotatorId = options.annotatorId ?? 'anonymous';
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { 'X-Annotator-Id': this.annotatorId };
    let payload: BodyInit | undefined;
    if (body instanceof FormData) {
      payload = body; // fetch sets the multipart boundary itself
    } else if (body !== undefined) {
      headers['Content-Type'] = 'application/json';
      payload = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: payload,
    });
    if (!response.ok) {
      throw await toApiError(response);
    }
    return (await response.json()) as T;
  }

  listProjects(): Promise<ProjectSummary[]> {
    return this.request('GET', '/v1/projects');
  }

  createProject(body: { name: string; taxonomy?: string; config?: object }): Promise<ProjectSummary> {
    return this.request('POST', '/v1/projects', body);
  }

  getProject(projectId: string): Promise<ProjectDetail> {
    return this.request('GET', `/v1/projects/${projectId}`);
  }

  listImages(projectId: string): Promise<ImageRecord[]> {
    return this.request('GET', `/v1/projects/${projectId}/images`);
  }

  uploadImages(projectId: string, files: Array<{ name: string; data: Blob }>): Promise<ImageRecord[]> {
    const form = new FormData();
    for (const file of files) {
      form.append('files', file.data, file.name);
    }
    return this.request('POST', `/v1/projects/${projectId}/images`, form);
  }

  /** URL for the raw image bytes; hand it straight to an <img> or drawImage. */
  imageContentUrl(imageId: string): string {
    return `${this.baseUrl}/v1/images/${imageId}/content`;
  }

  listAnnotations(projectId: string, status?: AnnotationStatus): Promise<Annotation[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : '';
    return this.request('GET', `/v1/projects/${projectId}/annotations${query}`);
  }

  createAnnotation(projectId: string, body: { image_id: string; box?: Box }): Promise<Annotation> {
    return this.request('POST', `/v1/projects/${projectId}/annotations`, body);
  }

  submitVerdict(annotationId: string, body: VerdictBody): Promise<Annotation> {
    return this.request('POST', `/v1/annotations/${annotationId}/verdict`, body);
  }

  submitLabelJob(
    projectId: string,
    body: { filter?: Record<string, unknown>; idempotency_key: string },
  ): Promise<LabelJob> {
    return this.request('POST', `/v1/projects/${projectId}/label-jobs`, {
      filter: body.filter ?? {},
      idempotency_key: body.idempotency_key,
    });
  }

  getLabelJob(jobId: string): Promise<LabelJob> {
    return this.request('GET', `/v1/label-jobs/${jobId}`);
  }

  /** Poll a job until it settles (Done or Failed). */
  async waitForJob(
    jobId: string,
    options: { intervalMs?: number; timeoutMs?: number } = {},
  ): Promise<LabelJob> {
    const interval = options.intervalMs ?? 150;
    const deadline = Date.now() + (options.timeoutMs ?? 30_000);
    for (;;) {
      const job = await this.getLabelJob(jobId);
      if (job.state === 'Done' || job.state === 'Failed') {
        return job;
      }
      if (Date.now() > deadline) {
        throw new ApiError('JobTimeout', `job ${jobId} still ${job.state}`, 0);
      }
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  getStats(projectId: string, policy?: string): Promise<StatsPayload> {
    const query = policy ? `?policy=${encodeURIComponent(policy)}` : '';
    return this.request('GET', `/v1/projects/${projectId}/stats${query}`);
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let type = 'HttpError';
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as Record<string, unknown>;
    const envelope = body['error'];
    if (envelope && typeof envelope === 'object') {
      const e = envelope as { type?: string; message?: string };
      type = e.type ?? type;
      message = e.message ?? message;
    } else if (body['detail'] !== undefined) {
      // request-validation failures bypass the service's envelope
      type = 'ValidationError';
      message = JSON.stringify(body['detail']);
    }
  } catch {
    // non-JSON body: keep the HTTP fallback text
  }
  return new ApiError(type, message, response.status);
}
