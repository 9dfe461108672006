import random

import pytest

from logtranslate.corpus import DatasetProfile, generate_dataset, preset_profile, write_corpus
from logtranslate.fields import CLF, ELF, generate_record
from logtranslate.truth import LogParseError, annotate_file, annotate_line, write_rejects

REFERENCE_LINE = ('192.168.4.25 - - [22/Dec/2016:16:11:41 +0300] "POST /DVWA/login.php HTTP/1.1" '
                  '200 1532 "-" "Mozilla/4.0 (compatible; MSIE 8.0; Windows NT 6.1; Trident/4.0; w3af.sf.net"')
REFERENCE_ANN = ('hhhhhhhhhhhh_l_u_[tttttttttttttttttttttttttt]_"rrrrrrrrrrrrrrrrrrrrrrrrrrrrr"_sss_bbbb_"R"_'
                 '"iiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiiii"')


def test_reference_elf_line():
    rec = annotate_line(REFERENCE_LINE, "elf")
    assert rec.ann == REFERENCE_ANN


def test_clf_line():
    line = '10.0.0.1 - bob [01/Jan/2000:00:00:00 -0500] "GET / HTTP/1.0" 404 -'
    assert annotate_line(line, "clf").ann == "hhhhhhhh_l_uuu_[" + "t" * 26 + ']_"' + "r" * 14 + '"_sss_b'


def test_round_trip_generated_records():
    rng = random.Random(42)
    for _ in range(2000):
        for spec, fmt in ((CLF, "clf"), (ELF, "elf")):
            rec = generate_record(spec, rng)
            assert annotate_line(rec.raw, fmt) == rec


def test_round_trip_quoted_elf():
    recs = generate_dataset(DatasetProfile("q", 300, (("QuotedELF", 1.0),), seed=5))
    for rec in recs:
        got = annotate_line(rec.raw, "quoted-elf")
        assert got == rec
        assert got.ann[0] == got.ann[-1] == '"'


@pytest.mark.parametrize("line, fmt", [
    ("hello world", "clf"),
    ("", "clf"),
    ('1.2.3.4 - - [t] "GET / HTTP/1.0" 20x 5', "clf"),
    ('1.2.3.4 - - [t] "GET / HTTP/1.0" 200 5x', "clf"),
    ('1.2.3.4 - - [t] "GET / HTTP/1.0" 200 5 extra', "clf"),
    ('1.2.3.4 - - [t "GET / HTTP/1.0" 200 5', "clf"),
    ('1.2.3.4 - - [t] "GET / HTTP/1.0" 200 5', "elf"),
    ('1.2.3.4 - - [t] "GET / HTTP/1.0" 200 5 "-" "agent', "elf"),
    ('1.2.3.4 - - [t] "GET / HTTP/1.0" 200 5 "-" "agent"', "quoted-elf"),
    ("a\nb", "clf"),
])
def test_malformed_lines_raise(line, fmt):
    with pytest.raises(LogParseError) as info:
        annotate_line(line, fmt)
    assert 0 <= info.value.index <= len(line)


def test_error_names_offending_index():
    with pytest.raises(LogParseError) as info:
        annotate_line('1.2.3.4 - - [t] "GET / HTTP/1.0" 2000 5', "clf")
    assert info.value.index == len('1.2.3.4 - - [t] "GET / HTTP/1.0" ')


def test_agent_with_inner_quote_runs_to_end():
    line = '1.2.3.4 - - [t] "GET / HTTP/1.0" 200 5 "-" "say "hi" now"'
    assert annotate_line(line, "elf").ann.endswith('_"' + "i" * len('say "hi" now') + '"')


def test_field_order_is_monotone():
    rec = annotate_line(REFERENCE_LINE, "elf")
    firsts = [rec.ann.index(c) for c in "hlutrsbRi"]
    assert firsts == sorted(firsts)


def test_annotate_file_with_corrupt_line(tmp_path):
    recs = generate_dataset(preset_profile("TT", 100, seed=8))
    lines = [r.raw for r in recs]
    lines[36] = lines[36].replace("[", "(", 1)
    path = tmp_path / "access.log"
    path.write_text("\r\n".join(lines) + "\r\n", encoding="utf-8")
    good, rejects = annotate_file(path, "elf")
    assert len(good) == 99
    assert [r.line_number for r in rejects] == [37]
    assert good == recs[:36] + recs[37:]
    write_rejects(rejects, tmp_path / "rejects.csv")
    text = (tmp_path / "rejects.csv").read_text()
    assert text.splitlines()[0] == "line_number,reason"
    assert text.splitlines()[1].startswith("37,")


def test_annotate_file_quoted(tmp_path):
    recs = generate_dataset(preset_profile("TT", 50, seed=1))
    path = tmp_path / "q.log"
    path.write_text("".join(f'"{r.raw}"\n' for r in recs), encoding="utf-8")
    good, rejects = annotate_file(path, "quoted-elf")
    assert not rejects and len(good) == 50
    assert all(r.ann.startswith('"') and r.ann.endswith('"') for r in good)
    write_corpus(good, tmp_path / "q")


def test_binary_garbage_is_rejected(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(bytes(range(256)) * 4)
    good, rejects = annotate_file(path, "clf")
    assert not good and rejects
