#!/usr/bin/env python3
"""Writes the tiny reconstruction fixture with struct.pack, independently of the C++ writer.

One PINHOLE camera (fx=fy=500, cx=320, cy=240, 640x480), one image at the
identity pose observing one point at (0, 0, 5) with color (10, 20, 30).
"""
import os
import struct
import sys

out = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
bin_dir = os.path.join(out, "tiny_bin")
txt_dir = os.path.join(out, "tiny_txt")
os.makedirs(bin_dir, exist_ok=True)
os.makedirs(txt_dir, exist_ok=True)

with open(os.path.join(bin_dir, "cameras.bin"), "wb") as f:
    f.write(struct.pack("<Q", 1))
    f.write(struct.pack("<IiQQ", 1, 1, 640, 480))
    f.write(struct.pack("<4d", 500.0, 500.0, 320.0, 240.0))

with open(os.path.join(bin_dir, "images.bin"), "wb") as f:
    f.write(struct.pack("<Q", 1))
    f.write(struct.pack("<I", 1))
    f.write(struct.pack("<4d", 1.0, 0.0, 0.0, 0.0))
    f.write(struct.pack("<3d", 0.0, 0.0, 0.0))
    f.write(struct.pack("<I", 1))
    f.write(b"frame_0001.png\x00")
    f.write(struct.pack("<Q", 2))
    f.write(struct.pack("<ddQ", 320.5, 240.5, 7))
    f.write(struct.pack("<ddQ", 10.0, 20.0, 0xFFFFFFFFFFFFFFFF))

with open(os.path.join(bin_dir, "points3D.bin"), "wb") as f:
    f.write(struct.pack("<Q", 1))
    f.write(struct.pack("<Q", 7))
    f.write(struct.pack("<3d", 0.0, 0.0, 5.0))
    f.write(struct.pack("<3B", 10, 20, 30))
    f.write(struct.pack("<d", 0.25))
    f.write(struct.pack("<Q", 1))
    f.write(struct.pack("<II", 1, 0))

with open(os.path.join(txt_dir, "cameras.txt"), "w") as f:
    f.write("# Camera list with one line of data per camera:\n")
    f.write("# Number of cameras: 1\n")
    f.write("1 PINHOLE 640 480 500 500 320 240\n")

with open(os.path.join(txt_dir, "images.txt"), "w") as f:
    f.write("# Number of images: 1, mean observations per image: 2\n")
    f.write("1 1 0 0 0 0 0 0 1 frame_0001.png\n")
    f.write("320.5 240.5 7 10 20 -1\n")

with open(os.path.join(txt_dir, "points3D.txt"), "w") as f:
    f.write("# Number of points: 1, mean track length: 1\n")
    f.write("7 0 0 5 10 20 30 0.25 1 0\n")
