/**
 * Display formatting that must agree digit-for-digit with the server's
 * reports: half-up percentages, half-up currency, and tier badges.
 */

/**
 * Exact half-up percentage with two decimals: percentDisplay(269, 270)
 * is "99.63". Pure integer arithmetic, so it agrees with the server for
 * any realistic count.
 */
export function percentDisplay(numerator: number, denominator: number): string {
  if (!Number.isInteger(numerator) || !Number.isInteger(denominator)) {
    throw new RangeError('percentDisplay takes integer counts');
  }
  if (denominator <= 0) {
    throw new RangeError('denominator must be positive');
  }
  const value = BigInt(numerator) * 10000n;
  const total = BigInt(denominator);
  let scaled = value / total;
  if (2n * (value % total) >= total) {
    scaled += 1n;
  }
  const whole = scaled / 100n;
  const frac = scaled % 100n;
  return `${whole}.${frac.toString().padStart(2, '0')}`;
}

/**
 * A bare fraction (e.g. the `accuracy` float 0.996296…) rendered as a
 * two-decimal half-up percentage: "99.63". Works from the number's
 * decimal string representation, so ties round the way a human reading
 * the decimal expects, not the way the binary float falls.
 */
export function percentFromFraction(fraction: number): string {
  return scaledDecimalString(fraction, 2, 2);
}

/** Two-decimal half-up currency display; never renders "-0.00". */
export function moneyDisplay(amount: number): string {
  const text = scaledDecimalString(amount, 0, 2);
  return text === '-0.00' ? '0.00' : text;
}

/**
 * Tier badge for a taxonomy tier: the more stars, the more expert the
 * label, and the more a human's verification is worth.
 */
export function tierBadge(tier: number | null | undefined): string {
  if (tier == null || tier < 1) {
    return '';
  }
  return '*'.repeat(Math.min(tier, 3));
}

/**
 * Render value × 10^shift with `decimals` fraction digits, rounding
 * half-away-from-zero — decimal-string arithmetic throughout, exactly
 * like quantizing Decimal(str(value)).
 */
function scaledDecimalString(value: number, shift: number, decimals: number): string {
  if (!Number.isFinite(value)) {
    throw new RangeError(`value must be finite, got ${value}`);
  }
  const negative = value < 0;
  const { digits, exponent } = decomposeDecimal(Math.abs(value).toString());
  // target: round(digits * 10^(exponent + shift + decimals)), ties away from zero
  const power = exponent + shift + decimals;
  let scaled: bigint;
  if (power >= 0) {
    scaled = digits * 10n ** BigInt(power);
  } else {
    const divisor = 10n ** BigInt(-power);
    scaled = digits / divisor;
    if (2n * (digits % divisor) >= divisor) {
      scaled += 1n;
    }
  }
  const body = scaled.toString().padStart(decimals + 1, '0');
  const whole = body.slice(0, body.length - decimals);
  const frac = body.slice(body.length - decimals);
  const sign = negative && scaled !== 0n ? '-' : '';
  return decimals > 0 ? `${sign}${whole}.${frac}` : `${sign}${whole}`;
}

/** "123.45e-6" → digits 12345n, exponent -8 (value = digits × 10^exponent). */
function decomposeDecimal(text: string): { digits: bigint; exponent: number } {
  const match = /^(\d+)(?:\.(\d+))?(?:[eE]([+-]?\d+))?$/.exec(text);
  if (!match) {
    throw new RangeError(`not a decimal number: ${text}`);
  }
  const whole = match[1] ?? '0';
  const frac = match[2] ?? '';
  const exp = match[3] ? Number(match[3]) : 0;
  return { digits: BigInt(whole + frac), exponent: exp - frac.length };
}
