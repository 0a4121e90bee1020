import pytest

from codeval.specfile import (
    CommandCheck,
    CompileStep,
    FileCompare,
    FunctionUse,
    ParseError,
    SpecFile,
    SUPPORTED_RUN_STRATEGIES,
    TestCase,
    parse_spec,
    render_spec,
    scan_directives,
    validate_spec,
)

from helpers import HELLO_SPEC_TEXT

HELLO_SPEC_EXPECTED = SpecFile(
    run_strategy="evaluate.sh",
    compile_steps=(CompileStep("javac edu/sjsu/CS001/Hello.java"),),
    tests=(
        TestCase(ordinal=1, command="java edu.sjsu.CS001.Hello ben",
                 stdout_lines=("Hello ben",), expected_exit=0, timeout_s=20.0),
        TestCase(ordinal=2, command="java edu.sjsu.CS001.Hello",
                 stdout_lines=("USAGE: edu.sjsu.CS001.Hello name",),
                 expected_exit=1, timeout_s=20.0),
        TestCase(ordinal=3, command='java edu.sjsu.CS001.Hello "long name here!"',
                 hidden=True, stdout_lines=("Hello long name here!",),
                 expected_exit=0, timeout_s=20.0),
    ),
)


class TestParseHelloSpec:
    def test_structurally_equal_to_expected(self):
        assert parse_spec(HELLO_SPEC_TEXT) == HELLO_SPEC_EXPECTED

    def test_quoted_argument_kept_verbatim(self):
        spec = parse_spec(HELLO_SPEC_TEXT)
        assert '"long name here!"' in spec.tests[2].command

    def test_crlf_accepted(self):
        spec = parse_spec(HELLO_SPEC_TEXT.replace("\n", "\r\n"))
        assert spec == HELLO_SPEC_EXPECTED

    def test_parse_is_pure(self):
        assert parse_spec(HELLO_SPEC_TEXT) == parse_spec(HELLO_SPEC_TEXT)


class TestDefaults:
    def test_empty_document(self):
        spec = parse_spec("")
        assert spec == SpecFile()
        assert spec.run_strategy == "evaluate.sh"
        assert spec.compile_steps == () and spec.tests == ()

    def test_test_defaults(self):
        spec = parse_spec("T echo hi\nO hi")
        test = spec.tests[0]
        assert test.expected_exit == 0
        assert test.timeout_s == 20.0
        assert not test.hidden

    def test_ordinals_consecutive_from_one(self):
        spec = parse_spec("T a\nT b\nHT c")
        assert [t.ordinal for t in spec.tests] == [1, 2, 3]


# Every tag of the grammar lands in exactly one SpecFile field.
SINGLE_TAG_CASES = [
    ("RUN custom.sh", lambda s: s.run_strategy == "custom.sh"),
    ("Z fixtures.zip", lambda s: s.support_archives == ("fixtures.zip",)),
    ("C gcc -o prog main.c", lambda s: s.compile_steps == (CompileStep("gcc -o prog main.c"),)),
    ("CF fork main.c util.c",
     lambda s: s.static_checks == (FunctionUse("fork", ("main.c", "util.c")),)),
    ("CMD ls -l", lambda s: s.static_checks == (CommandCheck("ls -l", False),)),
    ("TCMD ./validator", lambda s: s.static_checks == (CommandCheck("./validator", True),)),
    ("CMP out.txt expected.txt",
     lambda s: s.static_checks == (FileCompare("out.txt", "expected.txt"),)),
    ("T ./prog", lambda s: s.tests[0].command == "./prog" and not s.tests[0].hidden),
    ("HT ./prog", lambda s: s.tests[0].hidden),
    ("T ./prog\nI first input line", lambda s: s.tests[0].stdin_lines == ("first input line",)),
    ("T ./prog\nIF input.txt", lambda s: s.tests[0].stdin_file == "input.txt"),
    ("T ./prog\nO expected line", lambda s: s.tests[0].stdout_lines == ("expected line",)),
    ("T ./prog\nOF golden.txt", lambda s: s.tests[0].stdout_file == "golden.txt"),
    ("T ./prog\nE warning line", lambda s: s.tests[0].stderr_lines == ("warning line",)),
    ("T ./prog\nTO 5", lambda s: s.tests[0].timeout_s == 5.0),
    ("T ./prog\nX 3", lambda s: s.tests[0].expected_exit == 3),
]


@pytest.mark.parametrize("text,check", SINGLE_TAG_CASES,
                         ids=[c[0].split("\n")[-1].split(" ")[0] for c in SINGLE_TAG_CASES])
def test_single_tag_accepted(text, check):
    assert check(parse_spec(text))


class TestMultiValueTags:
    def test_multiple_o_lines_append_in_order(self):
        spec = parse_spec("T ./prog\nO one\nO two\nO three")
        assert spec.tests[0].stdout_lines == ("one", "two", "three")

    def test_multiple_i_and_e_lines_append(self):
        spec = parse_spec("T ./prog\nI a\nI b\nE x\nE y")
        assert spec.tests[0].stdin_lines == ("a", "b")
        assert spec.tests[0].stderr_lines == ("x", "y")

    def test_z_payload_splits_on_whitespace(self):
        spec = parse_spec("Z a.zip b.zip\nZ c.zip")
        assert spec.support_archives == ("a.zip", "b.zip", "c.zip")

    def test_multiple_compile_steps_in_order(self):
        spec = parse_spec("C make one\nC make two")
        assert [c.command for c in spec.compile_steps] == ["make one", "make two"]

    def test_static_check_order_preserved(self):
        spec = parse_spec("CMD ls\nCF fork main.c\nCMP a b\nTCMD ./v")
        kinds = [type(c).__name__ for c in spec.static_checks]
        assert kinds == ["CommandCheck", "FunctionUse", "FileCompare", "CommandCheck"]


class TestParseErrors:
    def test_attachment_before_any_test(self):
        with pytest.raises(ParseError) as err:
            parse_spec("X 0")
        assert err.value.line_number == 1

    @pytest.mark.parametrize("tag", ["I", "IF", "O", "OF", "E", "TO", "X"])
    def test_every_attachment_tag_requires_a_test(self, tag):
        with pytest.raises(ParseError):
            parse_spec(f"{tag} something")

    def test_unrecognized_tag(self):
        with pytest.raises(ParseError) as err:
            parse_spec("T ok\nFROB value")
        assert err.value.line_number == 2
        assert "FROB" in str(err.value)

    def test_lowercase_tag_rejected(self):
        with pytest.raises(ParseError):
            parse_spec("t ./prog")

    @pytest.mark.parametrize("line", ["T", "T ", "T    ", "RUN", "Z"])
    def test_missing_payload(self, line):
        with pytest.raises(ParseError):
            parse_spec(line)

    def test_duplicate_run(self):
        with pytest.raises(ParseError) as err:
            parse_spec("RUN a.sh\nRUN b.sh")
        assert err.value.line_number == 2

    @pytest.mark.parametrize("body,bad_line", [
        ("T x\nX 1\nX 2", 3),
        ("T x\nTO 1\nTO 2", 3),
        ("T x\nIF a\nIF b", 3),
        ("T x\nOF a\nOF b", 3),
    ])
    def test_duplicate_attachments(self, body, bad_line):
        with pytest.raises(ParseError) as err:
            parse_spec(body)
        assert err.value.line_number == bad_line

    @pytest.mark.parametrize("body", [
        "T x\nI a\nIF f",
        "T x\nIF f\nI a",
        "T x\nO a\nOF f",
        "T x\nOF f\nO a",
    ])
    def test_inline_and_file_forms_are_exclusive(self, body):
        with pytest.raises(ParseError):
            parse_spec(body)

    @pytest.mark.parametrize("payload", ["zero", "1.5", "0x1"])
    def test_non_integer_exit_code(self, payload):
        with pytest.raises(ParseError):
            parse_spec(f"T x\nX {payload}")

    @pytest.mark.parametrize("payload", ["0", "-1", "abc", "inf", "nan"])
    def test_bad_timeout(self, payload):
        with pytest.raises(ParseError):
            parse_spec(f"T x\nTO {payload}")

    def test_cf_requires_at_least_one_file(self):
        with pytest.raises(ParseError):
            parse_spec("CF fork")

    @pytest.mark.parametrize("payload", ["only_one", "a b c"])
    def test_cmp_requires_exactly_two_files(self, payload):
        with pytest.raises(ParseError):
            parse_spec(f"CMP {payload}")

    @pytest.mark.parametrize("payload", ["/abs/a b", "a ../b", "../a b"])
    def test_cmp_paths_must_stay_in_workspace(self, payload):
        with pytest.raises(ParseError):
            parse_spec(f"CMP {payload}")

    def test_error_points_at_offending_line_of_original_text(self):
        text = "T one\nO fine\n\nT two\nTO bogus\n"
        with pytest.raises(ParseError) as err:
            parse_spec(text)
        assert err.value.line_number == 5
        assert text.split("\n")[err.value.line_number - 1] == "TO bogus"


class TestPayloadHandling:
    def test_payload_is_everything_after_first_space(self):
        spec = parse_spec('T java Prog "two words"  --flag')
        assert spec.tests[0].command == 'java Prog "two words"  --flag'

    def test_trailing_whitespace_stripped(self):
        spec = parse_spec("T ./prog   \nO hi\t ")
        assert spec.tests[0].command == "./prog"
        assert spec.tests[0].stdout_lines == ("hi",)

    def test_blank_and_whitespace_lines_ignored(self):
        spec = parse_spec("\n  \nT x\n\t\nO y\n\n")
        assert len(spec.tests) == 1

    def test_scan_line_numbers_strictly_increase(self):
        directives = scan_directives("T a\n\nO b\n\nT c\n")
        numbers = [d.line_number for d in directives]
        assert numbers == sorted(numbers) and len(set(numbers)) == len(numbers)
        assert numbers == [1, 3, 5]


class TestValidateSpec:
    def test_hello_spec_is_clean(self):
        assert validate_spec(parse_spec(HELLO_SPEC_TEXT)) == []

    def test_no_tests_warning(self):
        warnings = validate_spec(parse_spec(""))
        assert len(warnings) == 1
        assert warnings[0].code == "no-tests"

    def test_unknown_strategy_warning(self):
        warnings = validate_spec(parse_spec("RUN custom.sh\nT x\nO y"))
        assert [w.code for w in warnings] == ["unknown-strategy"]

    def test_strategy_registry_contains_only_the_builtin(self):
        assert set(SUPPORTED_RUN_STRATEGIES) == {"evaluate.sh"}

    def test_file_references_collected(self):
        spec = parse_spec("CMP left.txt right.txt\nT x\nIF in.txt\nOF out.txt")
        codes = [w.code for w in validate_spec(spec)]
        assert codes.count("file-reference") == 3


class TestRenderSpec:
    def test_round_trip_of_hello_spec(self):
        spec = parse_spec(HELLO_SPEC_TEXT)
        assert parse_spec(render_spec(spec)) == spec

    def test_round_trip_covering_every_tag(self):
        text = (
            "RUN evaluate.sh\nZ a.zip b.zip\nC make\nCF fork main.c\n"
            "CMD ls\nTCMD ./v\nCMP a.txt b.txt\n"
            "T ./prog one\nI in\nO out\nE err\nX 2\nTO 3\n"
            "HT ./prog two\nIF stdin.txt\nOF golden.txt\n"
        )
        spec = parse_spec(text)
        assert parse_spec(render_spec(spec)) == spec

    def test_defaults_omitted_in_canonical_form(self):
        rendered = render_spec(parse_spec("T x\nO y\nX 0\nTO 20"))
        assert "X 0" not in rendered and "TO" not in rendered

    def test_rejects_unrenderable_values(self):
        with pytest.raises(ValueError):
            render_spec(SpecFile(tests=(TestCase(1, "evil\ncommand"),)))
        with pytest.raises(ValueError):
            render_spec(SpecFile(tests=(TestCase(1, "trailing "),)))
