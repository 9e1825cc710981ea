// Minimal binary PPM (P6) reader for client-side thumbnails.

export interface PpmImage {
  width: number;
  height: number;
  rgba: Uint8ClampedArray<ArrayBuffer>; // ready for canvas ImageData
}

export function decodePpm(bytes: Uint8Array): PpmImage {
  if (bytes[0] !== 0x50 || bytes[1] !== 0x36) throw new Error("not a P6 PPM");
  const tokens: string[] = [];
  let i = 2;
  while (tokens.length < 3) {
    if (i >= bytes.length) throw new Error("truncated PPM header");
    const c = bytes[i];
    if (c === 0x23) {
      while (i < bytes.length && bytes[i] !== 0x0a) i++;
    } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d) {
      i++;
    } else {
      let j = i;
      while (j < bytes.length && !isSpace(bytes[j]) && bytes[j] !== 0x23) j++;
      tokens.push(String.fromCharCode(...bytes.subarray(i, j)));
      i = j;
    }
  }
  if (i >= bytes.length || !isSpace(bytes[i])) throw new Error("bad PPM header");
  i++;
  const [width, height, maxval] = tokens.map((t) => parseInt(t, 10));
  if (!(width >= 1) || !(height >= 1)) throw new Error("bad PPM dimensions");
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  const need = width * height * 3;
  if (bytes.length - i < need) throw new Error("truncated PPM raster");
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let p = 0; p < width * height; p++) {
    rgba[p * 4] = bytes[i + p * 3];
    rgba[p * 4 + 1] = bytes[i + p * 3 + 1];
    rgba[p * 4 + 2] = bytes[i + p * 3 + 2];
    rgba[p * 4 + 3] = 255;
  }
  return { width, height, rgba };
}

function isSpace(c: number): boolean {
  return c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d;
}
