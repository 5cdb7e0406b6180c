"""Writes the two-image IDX fixture used by the loader tests.

Image 0 is a vertical ramp (pixel = 9 * row), image 1 a single white pixel
at row 3, column 5. Labels are 7 and 2. A gzip copy of the image file lets
the tests cover transparent decompression.
"""

import gzip
import struct
import sys
from pathlib import Path

out = Path(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/idx")
out.mkdir(parents=True, exist_ok=True)

ramp = bytes(9 * r for r in range(28) for _ in range(28))
dot = bytearray(28 * 28)
dot[3 * 28 + 5] = 255
images = struct.pack(">IIII", 0x803, 2, 28, 28) + ramp + bytes(dot)
labels = struct.pack(">II", 0x801, 2) + bytes([7, 2])

(out / "train-images-idx3-ubyte").write_bytes(images)
(out / "train-labels-idx1-ubyte").write_bytes(labels)
with gzip.GzipFile(out / "t10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
    f.write(images)
(out / "t10k-labels-idx1-ubyte").write_bytes(labels)
