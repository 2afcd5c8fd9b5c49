/**
 * Stats shaping and the cost model: status counts in a fixed order,
 * exact percentage text, and the straight-line labeling-cost comparison.
 */

import { describe, expect, it } from 'vitest';
import type { StatsPayload } from '../src/api';
import {
  computeCost,
  costLines,
  renderAccuracyPercent,
  shapeStats,
  STATUS_ORDER,
} from '../src/stats';
import { mulberry32, uniform } from './prng';

function payload(overrides: Partial<StatsPayload> = {}): StatsPayload {
  return {
    counts: { total: 0 },
    agreement: {},
    accuracy: null,
    cost_inputs: { n_items: 0, n_ai_labeled: 0, n_reviewed: 0 },
    ...overrides,
  };
}

describe('shapeStats', () => {
  it('lists every status in lifecycle order, defaulting to zero', () => {
    const view = shapeStats(
      payload({ counts: { total: 7, AiLabeled: 4, Verified: 3 } }),
    );
    expect(view.total).toBe(7);
    expect(view.statusCounts.map((c) => c.status)).toEqual([...STATUS_ORDER]);
    expect(view.statusCounts).toEqual([
      { status: 'BoxDrawn', count: 0 },
      { status: 'AiLabeled', count: 4 },
      { status: 'Verified', count: 3 },
      { status: 'Corrected', count: 0 },
      { status: 'Flagged', count: 0 },
    ]);
  });

  it('renders accuracy from exact counts', () => {
    const view = shapeStats(
      payload({
        accuracy: {
          total: 270,
          correct: 269,
          accuracy: 269 / 270,
          display: '99.63',
          unlabeled: 0,
          per_class: {
            cat: { total: 135, correct: 135 },
            dog: { total: 135, correct: 134 },
          },
        },
      }),
    );
    expect(view.accuracyText).toBe('99.63%');
    expect(view.accuracyDetail).toBe('269/270');
    expect(view.perClass).toEqual([
      { className: 'cat', correct: 135, total: 135, percentText: '100.00%' },
      { className: 'dog', correct: 134, total: 135, percentText: '99.26%' },
    ]);
  });

  it('shows no accuracy text without ground truth', () => {
    const view = shapeStats(payload());
    expect(view.accuracyText).toBeNull();
    expect(view.accuracyDetail).toBeNull();
    expect(view.perClass).toEqual([]);
  });

  it('renders per-class agreement rates from accept/correct counts', () => {
    const view = shapeStats(
      payload({
        agreement: {
          cat: { accepted: 7, corrected: 1, acceptance_rate: 7 / 8 },
          dog: { accepted: 0, corrected: 2, acceptance_rate: 0 },
        },
      }),
    );
    expect(view.agreement).toEqual([
      { className: 'cat', accepted: 7, corrected: 1, rateText: '87.50%' },
      { className: 'dog', accepted: 0, corrected: 2, rateText: '0.00%' },
    ]);
  });
});

describe('renderAccuracyPercent', () => {
  it('prefers exact integer counts', () => {
    expect(renderAccuracyPercent(269, 270, 0.99)).toBe('99.63');
  });

  it('falls back to the bare fraction when counts are unusable', () => {
    expect(renderAccuracyPercent(undefined, undefined, 269 / 270)).toBe('99.63');
    expect(renderAccuracyPercent(1, 0, 0.42)).toBe('42.00');
  });
});

describe('computeCost', () => {
  const params = {
    nItems: 1000,
    humanFullSeconds: 30,
    humanBoxSeconds: 10,
    wagePerHour: 18,
    apiCostPerItem: 0.0002,
  };

  it('computes the straight-line comparison', () => {
    const report = computeCost(params);
    expect(report.humanOnlyCost).toBeCloseTo(150, 9);
    expect(report.assistedHumanCost).toBeCloseTo(50, 9);
    expect(report.apiCost).toBeCloseTo(0.2, 9);
    expect(report.assistedTotal).toBeCloseTo(50.2, 9);
    expect(report.savings).toBeCloseTo(99.8, 9);
    expect(report.roi).toBeCloseTo(99.8 / 50.2, 9);
  });

  it('reports no ROI when nothing is spent', () => {
    const report = computeCost({ ...params, nItems: 0 });
    expect(report.humanOnlyCost).toBe(0);
    expect(report.assistedTotal).toBe(0);
    expect(report.savings).toBe(0);
    expect(report.roi).toBeNull();
  });

  it('rejects negative or non-finite parameters', () => {
    expect(() => computeCost({ ...params, nItems: -1 })).toThrow(RangeError);
    expect(() => computeCost({ ...params, wagePerHour: Number.NaN })).toThrow(RangeError);
    expect(() => computeCost({ ...params, apiCostPerItem: Infinity })).toThrow(RangeError);
  });

  it('holds its internal identities for random parameters', () => {
    const rng = mulberry32(0xcafe);
    for (let trial = 0; trial < 200; trial++) {
      const p = {
        nItems: Math.floor(uniform(rng, 0, 10_000)),
        humanFullSeconds: uniform(rng, 0, 300),
        humanBoxSeconds: uniform(rng, 0, 300),
        wagePerHour: uniform(rng, 0, 100),
        apiCostPerItem: uniform(rng, 0, 0.05),
      };
      const r = computeCost(p);
      expect(r.humanOnlyCost).toBeCloseTo((p.nItems * p.humanFullSeconds * p.wagePerHour) / 3600, 9);
      expect(r.assistedTotal).toBeCloseTo(r.assistedHumanCost + r.apiCost, 9);
      expect(r.savings).toBeCloseTo(r.humanOnlyCost - r.assistedTotal, 9);
      if (r.assistedTotal > 0) {
        expect(r.roi).toBeCloseTo(r.savings / r.assistedTotal, 9);
      } else {
        expect(r.roi).toBeNull();
      }
    }
  });
});

describe('costLines', () => {
  it('renders money strings and a four-decimal ROI', () => {
    const lines = costLines(
      computeCost({
        nItems: 1000,
        humanFullSeconds: 30,
        humanBoxSeconds: 10,
        wagePerHour: 18,
        apiCostPerItem: 0.0002,
      }),
    );
    expect(lines).toEqual([
      { label: 'human-only cost', value: '150.00' },
      { label: 'assisted human cost', value: '50.00' },
      { label: 'api cost', value: '0.20' },
      { label: 'assisted total', value: '50.20' },
      { label: 'savings', value: '99.80' },
      { label: 'roi', value: '1.9880' },
    ]);
  });

  it('renders a dash for the undefined ROI', () => {
    const zero = computeCost({
      nItems: 0,
      humanFullSeconds: 0,
      humanBoxSeconds: 0,
      wagePerHour: 0,
      apiCostPerItem: 0,
    });
    expect(costLines(zero).at(-1)).toEqual({ label: 'roi', value: '—' });
  });
});
