import assert from 'node:assert/strict';
import { test } from 'node:test';
import { projectTo2d } from '../src/pca.js';
test('two-dimensional features pass through unchanged', () => {
    const pts = [[1, 2], [3, 4], [-1, 0]];
    assert.deepEqual(projectTo2d(pts), [[1, 2], [3, 4], [-1, 0]]);
});
test('empty input yields empty output', () => {
    assert.deepEqual(projectTo2d([]), []);
});
test('projection of a dominant-axis cloud preserves its spread', () => {
    // points hugging the direction (1, 1, 0, 0) with small noise elsewhere
    const rows = [];
    for (let i = 0; i < 60; i++) {
        const t = (i - 30) / 5;
        rows.push([t + 0.01 * Math.sin(i), t + 0.01 * Math.cos(i),
            0.02 * Math.sin(3 * i), 0.02 * Math.cos(2 * i)]);
    }
    const projected = projectTo2d(rows);
    assert.equal(projected.length, rows.length);
    const xs = projected.map((p) => p[0]);
    const spreadFirst = Math.max(...xs) - Math.min(...xs);
    const ys = projected.map((p) => p[1]);
    const spreadSecond = Math.max(...ys) - Math.min(...ys);
    // nearly all variance lives on the first display axis
    assert.ok(spreadFirst > 10, `first-axis spread ${spreadFirst}`);
    assert.ok(spreadSecond < 1, `second-axis spread ${spreadSecond}`);
});
