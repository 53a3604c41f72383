import pytest
from importlib import resources

from mbvp import asm, isa
from mbvp.devices import RamDevice
from mbvp.errors import AsmError, ImageFormatError, LoadError

FIXTURES = ["adder.asm", "life.asm", "stress.asm", "halt.asm", "irqdemo.asm"]


def fixture_source(name):
    return (resources.files("mbvp.workloads") / "programs" / name)\
        .read_text(encoding="utf-8")


def test_basic_section_and_symbol():
    img = asm.assemble("start: ADDI r1, r0, 55\nHALT\n")
    assert len(img.sections) == 1
    base, data = img.sections[0]
    assert base == 0 and len(data) == 8
    assert img.symbols == {"start": 0}
    assert img.entry_point == 0


def test_org_places_section():
    img = asm.assemble(".org 0x100\nw: .word 0xDEADBEEF\n")
    assert img.sections == [(0x100, b"\xde\xad\xbe\xef")]
    assert img.symbols["w"] == 0x100


def test_forward_branch_resolves():
    img = asm.assemble("BRI end\nADDI r1, r0, 1\nend: HALT\n")
    word = int.from_bytes(img.sections[0][1][0:4], "big")
    ins = isa.decode(word)
    assert ins.mnemonic == "BRI" and ins.imm16 == 8


def test_duplicate_label_reports_both_lines():
    src = "a: HALT\nADDI r1, r0, 1\na: HALT\n"
    with pytest.raises(AsmError) as ei:
        asm.assemble(src)
    msg = str(ei.value)
    assert "a" in msg and "line 3" in msg and "line 1" in msg


def test_unknown_mnemonic_with_line():
    with pytest.raises(AsmError) as ei:
        asm.assemble("HALT\nFROB r1, r2\n")
    assert ei.value.line == 2


def test_branch_out_of_range():
    src = "BRI far\n.org 0x20000\nfar: HALT\n"
    with pytest.raises(AsmError, match="range"):
        asm.assemble(src)


def test_overlapping_org_regions():
    src = ".org 0\n.word 1, 2, 3\n.org 0x4\n.word 9\n"
    with pytest.raises(AsmError, match="overlap"):
        asm.assemble(src)


def test_space_and_byte_directives():
    img = asm.assemble(".word 1\n.space 4\n.byte 0xAA, 0x55\n")
    assert img.sections[0][1] == b"\x00\x00\x00\x01\x00\x00\x00\x00\xaa\x55"


def test_li_short_and_long_forms():
    short = asm.assemble("LI r1, 100\nHALT\n")
    assert len(short.sections[0][1]) == 8          # ADDI + HALT
    long = asm.assemble("LI r1, 0x20100000\nHALT\n")
    assert len(long.sections[0][1]) == 12          # IMM + ORI + HALT


def test_li_label_uses_long_form():
    img = asm.assemble("LI r1, tgt\nHALT\ntgt: .word 0\n")
    words = [int.from_bytes(img.sections[0][1][i:i + 4], "big")
             for i in range(0, 8, 4)]
    assert isa.decode(words[0]).mnemonic == "IMM"
    assert isa.decode(words[1]).mnemonic == "ORI"


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_programs_assemble(name):
    img = asm.assemble(fixture_source(name))
    assert img.sections


@pytest.mark.parametrize("name", FIXTURES)
def test_disassemble_fixpoint(name):
    img1 = asm.assemble(fixture_source(name))
    text = asm.disassemble(img1)
    img2 = asm.assemble(text)
    assert img2.sections == img1.sections


def test_disassemble_unknown_word_rendered_as_word():
    img = asm.Image(sections=[(0, (0xFFFFFFFF).to_bytes(4, "big"))])
    assert ".word 0xFFFFFFFF" in asm.disassemble(img)


def test_disassemble_empty_image():
    assert asm.disassemble(asm.Image()) == ""


# -- loader ------------------------------------------------------------------

def test_load_roundtrip_into_bram():
    img = asm.assemble("ADDI r1, r0, 7\nHALT\n")
    bram = RamDevice(0x2000)
    asm.load_image(bram.data, img)
    assert bytes(bram.data[0:8]) == img.sections[0][1]


def test_load_crossing_bram_end_fails_before_write():
    img = asm.Image(sections=[(0x1FFF, b"\xaa\xbb")])
    bram = RamDevice(0x2000)
    with pytest.raises(LoadError):
        asm.load_image(bram.data, img)
    assert bram.data.count(0) == 0x2000     # nothing written


def test_load_empty_image_is_noop():
    bram = RamDevice(0x2000)
    asm.load_image(bram.data, asm.Image())
    assert bram.data.count(0) == 0x2000


def test_image_overlap_rejected():
    with pytest.raises(LoadError):
        asm.Image(sections=[(0, b"\x00" * 8), (4, b"\x11" * 4)])


def test_image_entry_point_must_be_inside():
    with pytest.raises(LoadError):
        asm.Image(sections=[(0x100, b"\x00" * 4)], entry_point=0)


# -- image file format -------------------------------------------------------

def test_image_file_roundtrip(tmp_path):
    img = asm.assemble(fixture_source("adder.asm"))
    path = tmp_path / "adder.img"
    asm.write_image_file(img, path)
    back = asm.read_image_file(path)
    assert back.sections == img.sections
    assert back.symbols == img.symbols
    text = path.read_text()
    assert text.startswith("MPIMG1\n")
    assert "SECTION 00000000" in text
    assert "SYM start 00000000" in text


def test_image_file_bad_header(tmp_path):
    p = tmp_path / "bad.img"
    p.write_text("NOPE\n")
    with pytest.raises(ImageFormatError):
        asm.read_image_file(p)


def test_image_file_length_mismatch(tmp_path):
    p = tmp_path / "bad.img"
    p.write_text("MPIMG1\nSECTION 00000000 00000008\nAABB\n")
    with pytest.raises(ImageFormatError):
        asm.read_image_file(p)
