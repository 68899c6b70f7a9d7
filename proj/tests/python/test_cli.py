import os
import re
import struct
import subprocess
import zlib

import numpy as np
import pytest

CLI = os.environ.get("BOARDSCAN_CLI", "boardscan")
PLACEMENT = re.compile(r"^([KQRBNPkqrbnp1-8]{1,8}/){7}[KQRBNPkqrbnp1-8]{1,8}$")


def write_png(path, img):
    h, w = img.shape[:2]
    rgb = np.ascontiguousarray(np.broadcast_to(img[..., None], (h, w, 3)) if img.ndim == 2 else img, dtype=np.uint8)
    raw = b"".join(b"\x00" + rgb[y].tobytes() for y in range(h))

    def chunk(tag, data):
        return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)

    with open(path, "wb") as f:
        f.write(b"\x89PNG\r\n\x1a\n")
        f.write(chunk(b"IHDR", struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)))
        f.write(chunk(b"IDAT", zlib.compress(raw)))
        f.write(chunk(b"IEND", b""))


def frontal_board(size=480, margin=40, dx=0):
    img = np.full((size, size), 128, np.uint8)
    cell = (size - 2 * margin) // 8
    for r in range(8):
        for c in range(8):
            y0, x0 = margin + r * cell, margin + dx + c * cell
            img[y0:y0 + cell, x0:x0 + cell] = 210 if (r + c) % 2 == 0 else 70
    return img


def run(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=300)


@pytest.fixture
def board(tmp_path):
    path = tmp_path / "board.png"
    write_png(path, frontal_board())
    return path


def one_hot_probs(path, placement):
    rows = ["# one-hot vectors, a8 first", "# columns K Q R B N P k q r b n p _"]
    order = "KQRBNPkqrbnp_"
    for ch in placement:
        row = ["0"] * 13
        row[order.index(ch)] = "1"
        rows.append(" ".join(row))
    path.write_text("\n".join(rows) + "\n")


START = "rnbqkbnr" + "p" * 8 + "_" * 32 + "P" * 8 + "RNBQKBNR"


def test_digitize_baseline(board):
    out = run("digitize", board)
    assert out.returncode == 0, out.stderr
    fen = out.stdout.split()[0]
    assert PLACEMENT.match(fen)
    assert fen.count("K") == 1 and fen.count("k") == 1


def test_digitize_with_probability_file(board, tmp_path):
    probs = tmp_path / "probs.txt"
    one_hot_probs(probs, START)
    out = run("digitize", board, "--probs", probs)
    assert out.returncode == 0, out.stderr
    assert out.stdout.split()[0] == "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR"


def test_cache_is_written_and_reused(board, tmp_path):
    cache = tmp_path / "board.loc"
    first = run("digitize", board, "--cache", cache)
    assert first.returncode == 0, first.stderr
    text = cache.read_text()
    assert text.count("\n") == 1
    values = text.split()
    assert len(values) == 8
    corners = [float(v) for v in values]
    assert all(20 < v < 460 for v in corners)
    second = run("digitize", board, "--cache", cache, "--json", tmp_path / "r.json")
    assert second.returncode == 0, second.stderr
    assert second.stdout.split()[0] == first.stdout.split()[0]
    assert '"cached"' in (tmp_path / "r.json").read_text()


def test_no_board_is_detection_failure(tmp_path):
    path = tmp_path / "flat.png"
    write_png(path, np.full((300, 300), 128, np.uint8))
    assert run("digitize", path).returncode == 2


def test_illegal_strict_fen_is_classification_failure(board, tmp_path):
    probs = tmp_path / "probs.txt"
    one_hot_probs(probs, "KKK" + START[3:])
    cfg = tmp_path / "argmax.cfg"
    cfg.write_text("inference = argmax\n")
    assert run("digitize", board, "--probs", probs, "--config", cfg).returncode == 3
    cfg.write_text("inference = argmax\nfen_mode = lenient\n")
    out = run("digitize", board, "--probs", probs, "--config", cfg)
    assert out.returncode == 0, out.stderr
    assert out.stdout.startswith("KKKqkbnr/")


def test_malformed_probability_file_is_bad_input(board, tmp_path):
    probs = tmp_path / "probs.txt"
    probs.write_text("\n".join(" ".join(["0.5"] * 13) for _ in range(64)) + "\n")
    out = run("digitize", board, "--probs", probs)
    assert out.returncode == 4
    assert "row 0" in out.stderr


def test_bad_input_and_config(board, tmp_path):
    assert run("digitize", tmp_path / "missing.png").returncode == 4
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("max_iters = 3\ncolour = red\n")
    out = run("digitize", board, "--config", cfg)
    assert out.returncode == 4
    assert "colour" in out.stderr
    junk = tmp_path / "junk.png"
    junk.write_bytes(b"not an image")
    assert run("digitize", junk).returncode == 4
    assert run("digitize").returncode == 4
    assert run("bench", "intersections", "--trials", "0").returncode == 4


def test_config_is_applied(board, tmp_path):
    probs = tmp_path / "probs.txt"
    one_hot_probs(probs, START)
    cfg = tmp_path / "ok.cfg"
    cfg.write_text("# rotated camera\norientation = white-top\n")
    out = run("digitize", board, "--probs", probs, "--config", cfg)
    assert out.returncode == 0, out.stderr
    assert out.stdout.split()[0] == "RNBKQBNR/PPPPPPPP/8/8/8/8/pppppppp/rnbkqbnr"


def test_watch_once(tmp_path):
    d = tmp_path / "frames"
    d.mkdir()
    write_png(d / "a_001.png", frontal_board())
    write_png(d / "b_002.png", frontal_board())
    write_png(d / "c_003.png", np.full((300, 300), 128, np.uint8))
    (d / "notes.txt").write_text("ignored")
    out = run("watch", d, "--once", "--period", "0.01")
    assert out.returncode == 0, out.stderr
    lines = out.stdout.strip().splitlines()
    assert len(lines) == 3
    assert "a_001.png" in lines[0] and "b_002.png" in lines[1] and "c_003.png" in lines[2]
    assert "skip" in lines[2]


def test_bench_intersections(tmp_path):
    snippet = tmp_path / "snippet.cfg"
    out = run("bench", "intersections", "--sizes", "8,64,256", "--trials", "2", "--snippet", snippet)
    assert out.returncode == 0, out.stderr
    body = [l for l in out.stdout.splitlines() if l and l[0].isdigit()]
    assert [int(l.split()[0]) for l in body] == [8, 64, 256]
    assert re.search(r"^intersection_threshold = \d+$", snippet.read_text(), re.M)
