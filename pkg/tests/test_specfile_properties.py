"""Property tests for the spec grammar: anything the renderer can write,
the parser reads back to an identical structure."""

from hypothesis import given, settings
from hypothesis import strategies as st

from codeval.specfile import (
    CommandCheck,
    CompileStep,
    FileCompare,
    FunctionUse,
    SpecFile,
    TestCase,
    parse_spec,
    render_spec,
)

# Payloads: printable ASCII, no line breaks, no trailing whitespace.
payloads = (
    st.text(st.characters(min_codepoint=32, max_codepoint=126),
            min_size=1, max_size=30)
    .map(str.rstrip)
    .filter(bool)
)

# Single whitespace-free words for Z names and CF/CMP paths; the leading
# character class keeps ".." from ever forming a path component.
words = st.from_regex(r"[A-Za-z0-9_][A-Za-z0-9_.\-]{0,11}", fullmatch=True)

exit_codes = st.integers(min_value=-128, max_value=255)
timeouts = st.one_of(
    st.integers(min_value=1, max_value=900).map(float),
    st.floats(min_value=0.1, max_value=900, allow_nan=False, allow_infinity=False),
)
maybe_lines = st.one_of(
    st.none(),
    st.lists(payloads, min_size=1, max_size=3).map(tuple),
)

static_checks = st.one_of(
    st.builds(FunctionUse, words, st.lists(words, min_size=1, max_size=3).map(tuple)),
    st.builds(CommandCheck, payloads, st.booleans()),
    st.builds(FileCompare, words, words),
)


@st.composite
def test_cases(draw, ordinal: int) -> TestCase:
    stdin_mode = draw(st.sampled_from(["none", "inline", "file"]))
    stdout_mode = draw(st.sampled_from(["none", "inline", "file"]))
    return TestCase(
        ordinal=ordinal,
        command=draw(payloads),
        hidden=draw(st.booleans()),
        stdin_lines=draw(st.lists(payloads, min_size=1, max_size=3).map(tuple))
        if stdin_mode == "inline" else None,
        stdin_file=draw(words) if stdin_mode == "file" else None,
        stdout_lines=draw(st.lists(payloads, min_size=1, max_size=3).map(tuple))
        if stdout_mode == "inline" else None,
        stdout_file=draw(words) if stdout_mode == "file" else None,
        stderr_lines=draw(maybe_lines),
        expected_exit=draw(exit_codes),
        timeout_s=draw(timeouts),
    )


@st.composite
def spec_files(draw) -> SpecFile:
    test_count = draw(st.integers(min_value=0, max_value=4))
    return SpecFile(
        run_strategy=draw(words),
        support_archives=draw(st.lists(words, max_size=3).map(tuple)),
        compile_steps=draw(
            st.lists(st.builds(CompileStep, payloads), max_size=3).map(tuple)
        ),
        static_checks=draw(st.lists(static_checks, max_size=4).map(tuple)),
        tests=tuple(draw(test_cases(i + 1)) for i in range(test_count)),
    )


@settings(max_examples=500, deadline=None)
@given(spec_files())
def test_render_parse_round_trip(spec):
    assert parse_spec(render_spec(spec)) == spec


@settings(max_examples=100, deadline=None)
@given(spec_files())
def test_rendered_text_parses_deterministically(spec):
    text = render_spec(spec)
    assert parse_spec(text) == parse_spec(text)
