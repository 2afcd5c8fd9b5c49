/**
 * Project statistics shaped for display, plus the live cost calculator.
 *
 * Accuracy strings are recomputed from the raw counts with the same
 * half-up rounding the server uses, so the dashboard and the CLI report
 * can never disagree. The cost model is the straight-line recomputation:
 *
 *     human-only = n · full_sec/3600 · wage
 *     assisted   = n · box_sec/3600 · wage + n · api_cost
 *     savings    = human-only − assisted
 *     roi        = savings / assisted        (absent when assisted is 0)
 */

import type { StatsPayload } from './api';
import { moneyDisplay, percentDisplay, percentFromFraction } from './format';

export interface StatusCount {
  status: string;
  count: number;
}

export interface ClassAgreementView {
  className: string;
  accepted: number;
  corrected: number;
  rateText: string;
}

export interface PerClassAccuracyView {
  className: string;
  correct: number;
  total: number;
  percentText: string;
}

export interface StatsView {
  total: number;
  statusCounts: StatusCount[];
  /** "99.63%" when ground truth is loaded, null otherwise. */
  accuracyText: string | null;
  accuracyDetail: string | null; // e.g. "269/270"
  perClass: PerClassAccuracyView[];
  agreement: ClassAgreementView[];
}

export const STATUS_ORDER = ['BoxDrawn', 'AiLabeled', 'Verified', 'Corrected', 'Flagged'] as const;

/** Shape the raw stats payload; tolerates empty projects without special cases. */
export function shapeStats(payload: StatsPayload): StatsView {
  const statusCounts = STATUS_ORDER.map((status) => ({
    status,
    count: payload.counts[status] ?? 0,
  }));

  let accuracyText: string | null = null;
  let accuracyDetail: string | null = null;
  let perClass: PerClassAccuracyView[] = [];
  const accuracy = payload.accuracy;
  if (accuracy) {
    accuracyText = `${renderAccuracyPercent(accuracy.correct, accuracy.total, accuracy.accuracy)}%`;
    accuracyDetail = `${accuracy.correct}/${accuracy.total}`;
    perClass = Object.entries(accuracy.per_class).map(([className, counts]) => ({
      className,
      correct: counts.correct,
      total: counts.total,
      percentText: `${percentDisplay(counts.correct, counts.total)}%`,
    }));
  }

  const agreement = Object.entries(payload.agreement).map(([className, stats]) => ({
    className,
    accepted: stats.accepted,
    corrected: stats.corrected,
    rateText: `${percentDisplay(stats.accepted, stats.accepted + stats.corrected)}%`,
  }));

  return {
    total: payload.counts.total,
    statusCounts,
    accuracyText,
    accuracyDetail,
    perClass,
    agreement,
  };
}

/** Exact counts when available; otherwise round the bare fraction the same way. */
export function renderAccuracyPercent(
  correct: number | undefined,
  total: number | undefined,
  fraction: number,
): string {
  if (Number.isInteger(correct) && Number.isInteger(total) && (total as number) > 0) {
    return percentDisplay(correct as number, total as number);
  }
  return percentFromFraction(fraction);
}

export interface CostParams {
  nItems: number;
  humanFullSeconds: number;
  humanBoxSeconds: number;
  wagePerHour: number;
  apiCostPerItem: number;
}

export interface CostReport {
  humanOnlyCost: number;
  assistedHumanCost: number;
  apiCost: number;
  assistedTotal: number;
  savings: number;
  roi: number | null;
}

export function computeCost(params: CostParams): CostReport {
  const values = [
    params.nItems,
    params.humanFullSeconds,
    params.humanBoxSeconds,
    params.wagePerHour,
    params.apiCostPerItem,
  ];
  if (values.some((v) => !Number.isFinite(v) || v < 0)) {
    throw new RangeError('cost parameters must be finite and >= 0');
  }
  const humanOnlyCost = (params.nItems * params.humanFullSeconds * params.wagePerHour) / 3600;
  const assistedHumanCost = (params.nItems * params.humanBoxSeconds * params.wagePerHour) / 3600;
  const apiCost = params.nItems * params.apiCostPerItem;
  const assistedTotal = assistedHumanCost + apiCost;
  const savings = humanOnlyCost - assistedTotal;
  return {
    humanOnlyCost,
    assistedHumanCost,
    apiCost,
    assistedTotal,
    savings,
    roi: assistedTotal > 0 ? savings / assistedTotal : null,
  };
}

export interface CostLine {
  label: string;
  value: string;
}

export function costLines(report: CostReport): CostLine[] {
  const lines: CostLine[] = [
    { label: 'human-only cost', value: moneyDisplay(report.humanOnlyCost) },
    { label: 'assisted human cost', value: moneyDisplay(report.assistedHumanCost) },
    { label: 'api cost', value: moneyDisplay(report.apiCost) },
    { label: 'assisted total', value: moneyDisplay(report.assistedTotal) },
    { label: 'savings', value: moneyDisplay(report.savings) },
  ];
  lines.push({
    label: 'roi',
    value: report.roi === null ? '—' : report.roi.toFixed(4),
  });
  return lines;
}
