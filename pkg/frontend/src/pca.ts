/** Project feature vectors to two display axes.
 *
 * Two-dimensional data passes through untouched; anything wider is
 * projected onto its first two principal axes, computed client-side with
 * plain power iteration so no numerics library ships with the bundle.
 */

function subtractMean(rows: number[][]): number[][] {
  const d = rows[0].length;
  const mean = new Array(d).fill(0);
  for (const row of rows) for (let j = 0; j < d; j++) mean[j] += row[j];
  for (let j = 0; j < d; j++) mean[j] /= rows.length;
  return rows.map((row) => row.map((x, j) => x - mean[j]));
}

function matVec(cov: number[][], v: number[]): number[] {
  return cov.map((row) => row.reduce((acc, x, j) => acc + x * v[j], 0));
}

function normalize(v: number[]): number[] {
  const norm = Math.hypot(...v) || 1;
  return v.map((x) => x / norm);
}

function covariance(centered: number[][]): number[][] {
  const d = centered[0].length;
  const cov = Array.from({ length: d }, () => new Array(d).fill(0));
  for (const row of centered) {
    for (let i = 0; i < d; i++) {
      for (let j = 0; j < d; j++) cov[i][j] += row[i] * row[j];
    }
  }
  const scale = 1 / Math.max(centered.length - 1, 1);
  for (let i = 0; i < d; i++) for (let j = 0; j < d; j++) cov[i][j] *= scale;
  return cov;
}

function powerIteration(cov: number[][], deflate: number[] | null): number[] {
  const d = cov.length;
  let v = normalize(Array.from({ length: d }, (_, i) => 1 / (i + 1)));
  for (let iter = 0; iter < 100; iter++) {
    let next = matVec(cov, v);
    if (deflate) {
      const dot = next.reduce((acc, x, j) => acc + x * deflate[j], 0);
      next = next.map((x, j) => x - dot * deflate[j]);
    }
    next = normalize(next);
    const change = Math.hypot(...next.map((x, j) => x - v[j]));
    v = next;
    if (change < 1e-10) break;
  }
  return v;
}

export function projectTo2d(features: number[][]): Array<[number, number]> {
  if (features.length === 0) return [];
  const d = features[0].length;
  if (d <= 2) {
    return features.map((f) => [f[0] ?? 0, f[1] ?? 0]);
  }
  const centered = subtractMean(features);
  const cov = covariance(centered);
  const first = powerIteration(cov, null);
  const second = powerIteration(cov, first);
  return centered.map((row) => [
    row.reduce((acc, x, j) => acc + x * first[j], 0),
    row.reduce((acc, x, j) => acc + x * second[j], 0),
  ]);
}
