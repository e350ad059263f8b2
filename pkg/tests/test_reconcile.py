import json

import pytest
from hypothesis import given, strategies as st

from forgekg.reconcile import (AuthorityCandidate, AuthorityClient,
                               EntityKind, MatchStatus, PendingReview,
                               ReconcileError, ReviewDecision, Service,
                               auto_match, load_decisions, normalize_label,
                               reconcile_label, review_queue, save_decisions,
                               score_candidate)


def brute_force_edit_distance(a: str, b: str) -> int:
    """Independent DP oracle over the full matrix."""
    rows, cols = len(a) + 1, len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[-1][-1]


def oracle_score(a: str, b: str) -> float:
    na, nb = normalize_label(a), normalize_label(b)
    longest = max(len(na), len(nb))
    if longest == 0:
        return 1.0
    return 1.0 - brute_force_edit_distance(na, nb) / longest


class TestScoreCandidate:
    def test_identity(self):
        assert score_candidate("Lorenzo Valla", "Lorenzo Valla") == 1.0

    def test_disjoint(self):
        assert score_candidate("abc", "xyz") == 0.0

    def test_derived_value_against_oracle(self):
        expected = oracle_score("Lorenzo Valla", "Laurentius Valla")
        assert score_candidate("Lorenzo Valla",
                               "Laurentius Valla") == pytest.approx(expected)

    def test_punctuation_and_case_ignored(self):
        assert score_candidate("Valla, Lorenzo.", "valla lorenzo") == 1.0

    @given(st.text(min_size=1, max_size=20).filter(
               lambda s: normalize_label(s) != "" or True),
           st.text(min_size=1, max_size=20))
    def test_symmetric_and_matches_oracle(self, a, b):
        assert score_candidate(a, b) == pytest.approx(score_candidate(b, a))
        assert score_candidate(a, b) == pytest.approx(oracle_score(a, b))

    @given(st.text(min_size=1, max_size=30))
    def test_self_score_is_one(self, a):
        assert score_candidate(a, a) == 1.0


def _cand(score, external_id="X1", label="x"):
    return AuthorityCandidate(service=Service.WIKIDATA,
                              external_id=external_id, label=label,
                              score=score)


class TestAutoMatch:
    def test_clear_winner(self):
        match, review = auto_match([_cand(0.98), _cand(0.60, "X2")],
                                   threshold=0.95)
        assert match is not None and match.score == 0.98
        assert review is False

    def test_margin_too_small(self):
        match, review = auto_match([_cand(0.98), _cand(0.96, "X2")],
                                   threshold=0.95)
        assert match is None and review is True

    def test_below_threshold(self):
        match, review = auto_match([_cand(0.90)], threshold=0.95)
        assert match is None and review is True

    def test_empty_list(self):
        match, review = auto_match([], threshold=0.95)
        assert match is None and review is False

    def test_bad_threshold(self):
        with pytest.raises(ReconcileError):
            auto_match([_cand(0.9)], threshold=1.5)

    @given(st.lists(st.floats(0.0, 1.0).map(lambda s: round(s, 3)),
                    max_size=8),
           st.floats(0.05, 1.0).map(lambda t: round(t, 3)))
    def test_never_returns_below_threshold(self, scores, threshold):
        candidates = [_cand(s, f"X{i}") for i, s in enumerate(scores)]
        match, _ = auto_match(candidates, threshold=threshold)
        assert match is None or match.score >= threshold


class TestAuthorityClient:
    def _client(self, tmp_path, counting_get):
        return AuthorityClient(cache_dir=tmp_path / "cache",
                               http_get=counting_get)

    def test_search_scores_and_caches(self, tmp_path, counting_get):
        counting_get.payloads["wbsearchentities"] = {
            "search": [{"id": "Q316836", "label": "Lorenzo Valla",
                        "description": "humanist"}]}
        client = self._client(tmp_path, counting_get)
        first = client.search(Service.WIKIDATA, "Lorenzo Valla",
                              EntityKind.PERSON)
        assert len(first) == 1
        assert first[0].label.casefold() == "lorenzo valla"
        assert first[0].score == 1.0
        again = client.search(Service.WIKIDATA, "Lorenzo Valla",
                              EntityKind.PERSON)
        assert again == first
        assert counting_get.calls == 1  # second hit served from cache

    def test_empty_label_rejected(self, tmp_path, counting_get):
        client = self._client(tmp_path, counting_get)
        with pytest.raises(ReconcileError):
            client.search(Service.GEONAMES, "", EntityKind.PLACE)

    def test_viaf_place_incompatible(self, tmp_path, counting_get):
        client = self._client(tmp_path, counting_get)
        with pytest.raises(ReconcileError):
            client.search(Service.VIAF, "Rome", EntityKind.PLACE)

    def test_geonames_person_incompatible(self, tmp_path, counting_get):
        client = self._client(tmp_path, counting_get)
        with pytest.raises(ReconcileError):
            client.search(Service.GEONAMES, "Valla", EntityKind.PERSON)

    def test_fetch_life_dates(self, tmp_path, counting_get):
        counting_get.payloads["Q316836"] = {
            "entities": {"Q316836": {"claims": {
                "P569": [{"mainsnak": {"datavalue": {
                    "type": "time",
                    "value": {"time": "+1407-01-01T00:00:00Z"}}}}],
                "P570": [{"mainsnak": {"datavalue": {
                    "type": "time",
                    "value": {"time": "+1457-08-01T00:00:00Z"}}}}],
            }}}}
        client = self._client(tmp_path, counting_get)
        assert client.fetch_life_dates("Q316836") == (1407, 1457)

    def test_missing_death_date(self, tmp_path, counting_get):
        counting_get.payloads["Q1"] = {
            "entities": {"Q1": {"claims": {
                "P569": [{"mainsnak": {"datavalue": {
                    "type": "time",
                    "value": {"time": "+1407-01-01T00:00:00Z"}}}}],
            }}}}
        client = self._client(tmp_path, counting_get)
        assert client.fetch_life_dates("Q1") is None

    def test_malformed_id(self, tmp_path, counting_get):
        client = self._client(tmp_path, counting_get)
        with pytest.raises(ReconcileError):
            client.fetch_life_dates("X99")

    def test_warm_cache_makes_zero_network_calls(self, warm_cache_dir,
                                                 counting_get):
        client = AuthorityClient(cache_dir=warm_cache_dir,
                                 http_get=counting_get)
        entity, pending = reconcile_label(client, "Lorenzo Valla",
                                          EntityKind.PERSON)
        assert entity.status is MatchStatus.AUTO_MATCHED
        assert entity.wikidata_id == "Q316836"
        assert entity.life_years == (1407, 1457)
        assert pending is None
        assert counting_get.calls == 0

    def test_reconciliation_idempotent_on_cache(self, warm_cache_dir,
                                                counting_get):
        client = AuthorityClient(cache_dir=warm_cache_dir,
                                 http_get=counting_get)
        first, _ = reconcile_label(client, "Lorenzo Valla", EntityKind.PERSON)
        second, _ = reconcile_label(client, "Lorenzo Valla", EntityKind.PERSON)
        assert first == second


class TestReviewQueue:
    def _pending(self):
        return [PendingReview(
            raw_label="Lorenzo Valla", kind=EntityKind.PERSON,
            candidates=[_cand(0.97, "Q316836", "Lorenzo Valla"),
                        _cand(0.96, "Q999001", "Lorenzo Vallas")])]

    def test_batch_decision_applied(self, tmp_path):
        decisions = [ReviewDecision("Lorenzo Valla", EntityKind.PERSON,
                                    "Q316836", "2026-01-01T00:00:00Z")]
        resolved = review_queue(self._pending(), decisions)
        assert resolved[0].chosen == "Q316836"

    def test_batch_unoffered_candidate_rejected(self):
        decisions = [ReviewDecision("Lorenzo Valla", EntityKind.PERSON,
                                    "Q777", "2026-01-01T00:00:00Z")]
        with pytest.raises(ReconcileError, match="never offered"):
            review_queue(self._pending(), decisions)

    def test_empty_pending(self):
        assert review_queue([], []) == []

    def test_interactive_choice(self):
        answers = iter(["7", "1"])
        resolved = review_queue(self._pending(),
                                prompt=lambda _: next(answers),
                                echo=lambda _: None)
        assert resolved[0].chosen == "Q316836"

    def test_interactive_reject(self):
        resolved = review_queue(self._pending(), prompt=lambda _: "r",
                                echo=lambda _: None)
        assert resolved[0].chosen == "REJECT_ALL"

    def test_decisions_round_trip(self, tmp_path):
        decisions = [ReviewDecision("Valla", EntityKind.PERSON, "Q316836",
                                    "2026-01-01T00:00:00Z", "note")]
        path = tmp_path / "decisions.json"
        save_decisions(decisions, path)
        assert load_decisions(path) == decisions

    def test_malformed_decisions_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("[{}]")
        with pytest.raises(ReconcileError):
            load_decisions(path)


class TestReconcileLabel:
    def test_ambiguous_goes_to_review(self, warm_cache_dir, counting_get):
        client = AuthorityClient(cache_dir=warm_cache_dir,
                                 http_get=counting_get)
        entity, pending = reconcile_label(client, "Alphons Lhotsky",
                                          EntityKind.PERSON)
        assert entity.status is MatchStatus.UNMATCHED
        assert pending is not None
        assert len(pending.candidates) == 2

    def test_decision_resolves_ambiguity(self, warm_cache_dir, counting_get):
        client = AuthorityClient(cache_dir=warm_cache_dir,
                                 http_get=counting_get)
        decision = ReviewDecision("Alphons Lhotsky", EntityKind.PERSON,
                                  "Q86125", "2026-01-01T00:00:00Z")
        entity, pending = reconcile_label(client, "Alphons Lhotsky",
                                          EntityKind.PERSON,
                                          decision=decision)
        assert entity.status is MatchStatus.REVIEWED
        assert entity.wikidata_id == "Q86125"
        assert pending is None

    def test_no_candidates_unmatched(self, warm_cache_dir, counting_get):
        client = AuthorityClient(cache_dir=warm_cache_dir,
                                 http_get=counting_get)
        entity, pending = reconcile_label(client, "Theodor von Sickel",
                                          EntityKind.PERSON)
        assert entity.status is MatchStatus.UNMATCHED
        assert entity.wikidata_id is None
        assert pending is None

    def test_place_uses_geonames(self, warm_cache_dir, counting_get):
        client = AuthorityClient(cache_dir=warm_cache_dir,
                                 http_get=counting_get)
        entity, _ = reconcile_label(client, "Rome", EntityKind.PLACE)
        assert entity.geonames_id == "3169070"
        assert entity.viaf_id is None and entity.life_years is None
