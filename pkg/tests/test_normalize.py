import pytest
from hypothesis import given, strategies as st

from forgekg.extract import (NOT_MENTIONED, ExtractionResult, RawClaim,
                             RawMetadata)
from forgekg.normalize import (AuthenticityCategory, CategoryError,
                               DateParseError, YearInterval,
                               century_of_interval, normalize_category,
                               normalize_extraction, parse_historical_date)


class TestDateParsing:
    @pytest.mark.parametrize("raw,expected", [
        ("4th century", (300, 399)),
        ("1196", (1196, 1196)),
        ("c. 1100", (1090, 1110)),
        ("circa 1100", (1090, 1110)),
        ("ca. 850", (840, 860)),
        ("10th century BC", (-1000, -901)),
        ("10th century BCE", (-1000, -901)),
        ("12th c.", (1100, 1199)),
        ("950-1050", (950, 1050)),
        ("950–1050", (950, 1050)),
        ("44 BC", (-44, -44)),
        ("100 BC - 44 BC", (-100, -44)),
        ("1st century", (0, 99)),
        ("1st century BCE", (-100, -1)),
    ])
    def test_recognized_patterns(self, raw, expected):
        interval = parse_historical_date(raw)
        assert (interval.start_year, interval.end_year) == expected

    @pytest.mark.parametrize("raw", [
        "allegedly ancient", "", "fourth century", "1050-950", "0",
    ])
    def test_unrecognized_patterns(self, raw):
        with pytest.raises(DateParseError):
            parse_historical_date(raw)

    def test_error_carries_raw(self):
        with pytest.raises(DateParseError) as exc:
            parse_historical_date("allegedly ancient")
        assert exc.value.raw == "allegedly ancient"

    @given(st.sampled_from([
        "4th century", "1196", "c. 1100", "950-1050", "10th century BC",
        "3rd c.", "44 BCE",
    ]))
    def test_start_never_after_end(self, raw):
        interval = parse_historical_date(raw)
        assert interval.start_year <= interval.end_year


class TestCenturyOfInterval:
    def test_paper_convention(self):
        assert century_of_interval(YearInterval(300, 399)) == 4

    def test_midpoint_rule(self):
        assert century_of_interval(YearInterval(1407, 1457)) == 15

    def test_bce_mirror(self):
        assert century_of_interval(YearInterval(-1000, -901)) == -10

    @pytest.mark.parametrize("n", [n for n in range(-20, 22) if n != 0])
    def test_inverts_century_rule(self, n):
        # the interval minted for "nth century" maps back to n
        interval = parse_historical_date(
            f"{abs(n)}th century" + (" BCE" if n < 0 else ""))
        assert century_of_interval(interval) == n


class TestCategory:
    @pytest.mark.parametrize("raw,expected", [
        ("forgery", AuthenticityCategory.FORGERY),
        ("FORGED", AuthenticityCategory.FORGERY),
        ("  Authentic  ", AuthenticityCategory.AUTHENTIC),
        ("genuine", AuthenticityCategory.AUTHENTIC),
        ("Suspicious", AuthenticityCategory.SUSPICIOUS),
        ("disputed", AuthenticityCategory.SUSPICIOUS),
    ])
    def test_synonyms(self, raw, expected):
        assert normalize_category(raw) == expected

    def test_unrecognized_label(self):
        with pytest.raises(CategoryError):
            normalize_category("probably real-ish")

    def test_identity_on_enumeration(self):
        for member in AuthenticityCategory:
            assert normalize_category(member.value) == member


def _result(metadata=None, claims=()):
    return ExtractionResult(
        entry_id="doc-01", model_id="test",
        metadata=metadata or RawMetadata(),
        claims=list(claims),
    )


class TestNormalizeExtraction:
    def test_date_parsed(self):
        metadata, _, warnings = normalize_extraction(_result(
            RawMetadata(alleged_date="4th century")))
        assert metadata.alleged_date == YearInterval(300, 399)
        assert metadata.alleged_date_raw == "4th century"
        assert warnings == []

    def test_not_mentioned_becomes_absent(self):
        metadata, _, _ = normalize_extraction(_result(RawMetadata()))
        assert metadata.title is None
        assert metadata.alleged_date is None
        assert metadata.alleged_date_raw is None

    def test_unparseable_date_warns_keeps_raw(self):
        metadata, _, warnings = normalize_extraction(_result(
            RawMetadata(alleged_date="allegedly ancient")))
        assert metadata.alleged_date is None
        assert metadata.alleged_date_raw == "allegedly ancient"
        assert len(warnings) == 1
        assert warnings[0].stage == "normalize.date"

    def test_unclassified_claim_excluded_with_warning(self):
        _, claims, warnings = normalize_extraction(_result(claims=[
            RawClaim("Valla", "declared it a forgery")]))
        assert claims == []
        assert len(warnings) == 1

    def test_unrecognized_category_excluded(self):
        _, claims, warnings = normalize_extraction(_result(claims=[
            RawClaim("Valla", "opinion", category_label="real-ish")]))
        assert claims == []
        assert len(warnings) == 1

    def test_duplicate_claims_merged(self):
        _, claims, _ = normalize_extraction(_result(claims=[
            RawClaim("Valla", "first opinion", category_label="Forgery"),
            RawClaim("valla", "second opinion", category_label="Forgery"),
        ]))
        assert len(claims) == 1
        assert claims[0].opinion_text == "first opinion second opinion"

    def test_same_claimant_distinct_categories_not_merged(self):
        _, claims, _ = normalize_extraction(_result(claims=[
            RawClaim("Valla", "a", category_label="Forgery"),
            RawClaim("Valla", "b", category_label="Suspicious"),
        ]))
        assert len(claims) == 2

    @given(st.lists(st.tuples(
        st.sampled_from(["Valla", "Baronius", "Cusa"]),
        st.sampled_from(["Forgery", "Authentic", "nonsense", None]),
    ), max_size=12))
    def test_never_gains_claims(self, specs):
        raw = [RawClaim(name, "op", category_label=label)
               for name, label in specs]
        _, claims, warnings = normalize_extraction(_result(claims=raw))
        claim_warnings = [w for w in warnings if w.stage == "normalize.claim"]
        assert len(claims) <= len(raw)
        assert len(claims) + len(claim_warnings) <= len(raw)
