/** Minimal dense tensor: a shape plus flat row-major float32 data. */

export interface NdArray {
  shape: number[];
  data: Float32Array;
}

export function numel(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function zeros(shape: number[]): NdArray {
  return { shape: [...shape], data: new Float32Array(numel(shape)) };
}

export function fromValues(shape: number[], values: ArrayLike<number>): NdArray {
  if (values.length !== numel(shape)) {
    throw new Error(`value count ${values.length} != product of ${shape}`);
  }
  return { shape: [...shape], data: Float32Array.from(values) };
}

export function shapesEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((d, i) => d === b[i]);
}
