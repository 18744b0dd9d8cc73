import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { FormatError, ValidationError, Volume, readSev, runVoxeval, volume, writeSev } from "../src/index.js";
import { mulberry32 } from "./helpers.js";

describe("sev codec", () => {
  it("round-trips uint8 volumes", () => {
    const rand = mulberry32(1);
    const dims = [3, 4, 5];
    const data = Uint8Array.from({ length: 60 }, () => Math.floor(rand() * 256));
    const back = readSev(writeSev(volume(dims, data)));
    expect(back.dims).toEqual(dims);
    expect(back.dtype).toBe("u8");
    expect(Array.from(back.data)).toEqual(Array.from(data));
  });

  it("round-trips float32 volumes bit-exactly", () => {
    const dims = [2, 3, 2];
    const data = new Float32Array([0, 1, 0.1, 1e-10, 0.999999, 2 ** -140, 0.5, 0.25, 1 / 3, 0.7, 0.2, 1e-30]);
    const back = readSev(writeSev(volume(dims, data)));
    expect(back.dtype).toBe("f32");
    const a = new Uint8Array(data.buffer);
    const b = new Uint8Array((back.data as Float32Array).buffer, 0, a.length);
    expect(Array.from(b)).toEqual(Array.from(a));
  });

  it("round-trips 4D volumes", () => {
    const dims = [2, 3, 4, 2];
    const data = Uint8Array.from({ length: 48 }, (_, i) => i * 5);
    const back = readSev(writeSev(volume(dims, data)));
    expect(back.dims).toEqual(dims);
    expect(Array.from(back.data)).toEqual(Array.from(data));
  });

  it("writes the documented little-endian header", () => {
    const buf = writeSev(volume([1, 2, 258], new Uint8Array(516)));
    expect(buf.toString("ascii", 0, 4)).toBe("SEV1");
    expect(buf.readUInt8(4)).toBe(0); // dtype code
    expect(buf.readUInt8(5)).toBe(3); // ndim
    expect(buf.readUInt32LE(6)).toBe(1);
    expect(buf.readUInt32LE(10)).toBe(2);
    expect(buf.readUInt32LE(14)).toBe(258);
    expect(buf.length).toBe(6 + 12 + 516);
  });

  it("rejects malformed bytes", () => {
    const good = writeSev(volume([2, 2, 2], new Uint8Array(8)));
    expect(() => readSev(good.subarray(0, 5))).toThrow(FormatError);
    expect(() => readSev(good.subarray(0, 5))).toThrow(/truncated SEV header/);

    const badMagic = Buffer.from(good);
    badMagic.write("NOPE", 0, "ascii");
    expect(() => readSev(badMagic)).toThrow(/bad SEV magic/);

    const badCode = Buffer.from(good);
    badCode.writeUInt8(7, 4);
    expect(() => readSev(badCode)).toThrow(/unsupported SEV dtype code 7/);

    const badRank = Buffer.from(good);
    badRank.writeUInt8(2, 5);
    expect(() => readSev(badRank)).toThrow(/unsupported SEV rank 2/);

    expect(() => readSev(good.subarray(0, good.length - 1))).toThrow(/payload length/);

    const zeroDim = Buffer.from(good);
    zeroDim.writeUInt32LE(0, 6);
    expect(() => readSev(zeroDim)).toThrow(/>= 1/);
  });

  it("rejects inconsistent volumes at write time", () => {
    const short: Volume = { dims: [2, 2, 2], dtype: "u8", data: new Uint8Array(7) };
    expect(() => writeSev(short)).toThrow(ValidationError);
    const flat: Volume = { dims: [2, 2], dtype: "u8", data: new Uint8Array(4) };
    expect(() => writeSev(flat)).toThrow(/3D or 4D/);
  });
});

describe("sev cross-language", () => {
  let dir: string;

  beforeAll(async () => {
    dir = await mkdtemp(join(tmpdir(), "sev-x-"));
  });

  afterAll(async () => {
    await rm(dir, { recursive: true, force: true });
  });

  it("writes files the CLI parses, and the CLI writes identical bytes back", async () => {
    const rand = mulberry32(2);
    const dims = [4, 5, 6];
    const data = Float32Array.from({ length: 120 }, () => rand());
    data[0] = 0; // pin min
    const src = join(dir, "a.sev");
    await writeFile(src, writeSev(volume(dims, data)));

    const inspect = await runVoxeval(["inspect", src]);
    expect(inspect.stdout).toContain("format sev, dims 4x5x6, dtype float32");
    expect(inspect.stdout).toContain("min 0,");

    const dst = join(dir, "b.sev");
    await runVoxeval(["convert", src, dst]);
    const a = await readFile(src);
    const b = await readFile(dst);
    expect(b.equals(a)).toBe(true);
  });
});
