#!/usr/bin/env python3
"""Seed the authority-service cache shipped with the fixture corpus.

Writes service-shaped JSON payloads under tests/fixtures/authority_cache/
using the same hashed filenames the client computes, so pipeline runs on
the fixture corpus are fully offline with a warm cache.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from forgekg.reconcile import AuthorityClient, Service  # noqa: E402

CACHE_DIR = Path(__file__).resolve().parents[1] / "tests/fixtures/authority_cache"


def wd_search(*items):
    return {"search": [
        {"id": qid, "label": label, "description": desc}
        for qid, label, desc in items
    ]}


def wd_entity(qid, birth, death, viaf):
    def time_claim(year):
        sign = "+" if year >= 0 else "-"
        return [{"mainsnak": {"datavalue": {
            "type": "time",
            "value": {"time": f"{sign}{abs(year):04d}-01-01T00:00:00Z"},
        }}}]

    claims = {}
    if birth is not None:
        claims["P569"] = time_claim(birth)
    if death is not None:
        claims["P570"] = time_claim(death)
    if viaf is not None:
        claims["P214"] = [{"mainsnak": {"datavalue": {
            "type": "string", "value": viaf}}}]
    return {"entities": {qid: {"claims": claims}}}


def geo_search(*items):
    return {"geonames": [
        {"geonameId": gid, "name": name, "countryName": country}
        for gid, name, country in items
    ]}


SEARCHES = {
    "lorenzo valla": wd_search(
        ("Q316836", "Lorenzo Valla", "Italian humanist and philologist"),
        ("Q999001", "Lorenzo Vallas", "namesake")),
    "caesar baronius": wd_search(
        ("Q467743", "Caesar Baronius", "Italian cardinal and historian")),
    "nicholas of cusa": wd_search(
        ("Q48301", "Nicholas of Cusa", "German philosopher and theologian")),
    "wilhelm wattenbach": wd_search(
        ("Q63229", "Wilhelm Wattenbach", "German palaeographer")),
    "alphons lhotsky": wd_search(
        ("Q86125", "Alphons Lhotsky", "Austrian historian"),
        ("Q999002", "Alphons Lhotsky", "20th-century namesake")),
    "theodor von sickel": wd_search(),
    "constantine i": wd_search(
        ("Q8413", "Constantine I", "Roman emperor")),
    "friedrich barbarossa": wd_search(
        ("Q79789", "Friedrich Barbarossa", "Holy Roman Emperor")),
}

ENTITIES = {
    "Q316836": wd_entity("Q316836", 1407, 1457, "34512366"),
    "Q467743": wd_entity("Q467743", 1538, 1607, "76306499"),
    "Q48301": wd_entity("Q48301", 1401, 1464, "41839650"),
    "Q63229": wd_entity("Q63229", 1819, 1897, "59877998"),
    "Q86125": wd_entity("Q86125", 1903, 1968, "27128983"),
    "Q8413": wd_entity("Q8413", 272, 337, "84034107"),
    "Q79789": wd_entity("Q79789", 1122, 1190, "89660733"),
}

PLACES = {
    "rome": geo_search((3169070, "Rome", "Italy")),
    "vienna": geo_search((2761369, "Vienna", "Austria")),
}


def main():
    client = AuthorityClient(cache_dir=CACHE_DIR,
                             http_get=lambda url, params: {})
    written = 0
    for label, payload in SEARCHES.items():
        path = client._cache_path(Service.WIKIDATA, f"search:{label}:Person")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, ensure_ascii=False),
                        encoding="utf-8")
        written += 1
    for qid, payload in ENTITIES.items():
        path = client._cache_path(Service.WIKIDATA, f"entity:{qid}")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, ensure_ascii=False),
                        encoding="utf-8")
        written += 1
    for label, payload in PLACES.items():
        path = client._cache_path(Service.GEONAMES, f"search:{label}:Place")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, ensure_ascii=False),
                        encoding="utf-8")
        written += 1
    print(f"wrote {written} cache entries under {CACHE_DIR}")


if __name__ == "__main__":
    main()
