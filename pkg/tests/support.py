"""Shared builders for test messages and randomized rule-exercise corpora."""
from __future__ import annotations

import random
from typing import List, Optional

from gander.model import (
    ETHERTYPE_GOOSE,
    ETHERTYPE_SV,
    GooseMessage,
    MacAddress,
    Message,
    SvMessage,
    Timestamp,
    make_timestamp,
    parse_timestamp,
)

DM_G = MacAddress.from_text("01:0C:CD:01:00:03")
SM_G = MacAddress.from_text("00:00:00:27:34:31")
DM_S = MacAddress.from_text("01:0C:CD:04:00:01")
SM_S = MacAddress.from_text("00:00:00:27:22:13")


def ts(micros: int, raw: Optional[str] = None) -> Timestamp:
    if raw is None:
        return make_timestamp(micros)
    return parse_timestamp(raw)


def g(seq: int, micros: int, stnum: int = 1, sqnum: int = 0, d1: int = 0,
      d2: int = 1, dm: MacAddress = DM_G, sm: MacAddress = SM_G,
      appid: int = 3, dataset: str = "SEL_421_1CFG/LLN0$Goose",
      goid: str = "SEL_421_1", ethertype: int = ETHERTYPE_GOOSE,
      raw_time: Optional[str] = None) -> GooseMessage:
    return GooseMessage(ts(micros, raw_time), dm, sm, ethertype, appid,
                        dataset, goid, stnum, sqnum, d1, d2, seq)


def s(seq: int, micros: int, smpcnt: int = 0, dm: MacAddress = DM_S,
      sm: MacAddress = SM_S, appid: int = 40, svid: str = "4000",
      ethertype: int = ETHERTYPE_SV,
      raw_time: Optional[str] = None) -> SvMessage:
    return SvMessage(ts(micros, raw_time), dm, sm, ethertype, appid, svid,
                     smpcnt, seq)


def goose_heartbeats(n: int, start_us: int = 36_000_000_000,
                     gap_us: int = 1_000_000, stnum: int = 5,
                     sqnum0: int = 0, d1: int = 0, d2: int = 1) -> List[GooseMessage]:
    return [
        g(i, start_us + i * gap_us, stnum=stnum, sqnum=sqnum0 + i, d1=d1, d2=d2)
        for i in range(n)
    ]


def sv_run(n: int, start_us: int = 36_000_000_000, gap_us: int = 205,
           cnt0: int = 0, cnt_max: int = 4799) -> List[SvMessage]:
    return [
        s(i, start_us + i * gap_us, smpcnt=(cnt0 + i) % (cnt_max + 1))
        for i in range(n)
    ]


def random_goose_sequence(rng: random.Random, length: int) -> List[Message]:
    """A GOOSE sequence mixing compliant and violating transitions, with an
    occasional second stream and identity tampering."""
    t = rng.randrange(30_000_000_000, 40_000_000_000)
    st, sq, d1, d2 = rng.randrange(1, 30), rng.randrange(0, 20), 0, 1
    msgs: List[Message] = []
    alt_sm = MacAddress.from_text("00:00:00:11:22:33")
    for i in range(length):
        kind = rng.random()
        kwargs = {}
        gap = rng.choice([1, 5, 9, 11, 500, 999_000, 1_000_000, 1_500_000,
                          11_000_000])
        t += gap
        if kind < 0.45:            # compliant retransmission
            sq += 1
        elif kind < 0.55:          # compliant state change
            st += 1
            sq = 0
            d1 ^= 1
        elif kind < 0.62:          # sequence skip
            sq += rng.randrange(2, 6)
        elif kind < 0.69:          # state regression
            st = max(0, st - rng.randrange(1, 4))
            sq = rng.randrange(0, 5)
        elif kind < 0.76:          # data spoof: change without st+1/sq0
            d2 ^= 1
            sq += 1
        elif kind < 0.83:          # identity tamper
            field = rng.choice(["dm", "sm", "appid", "dataset", "goid",
                                "ethertype"])
            if field == "dm":
                kwargs["dm"] = MacAddress.from_text("01:0C:CD:01:00:FF")
            elif field == "sm":
                kwargs["sm"] = alt_sm
            elif field == "appid":
                kwargs["appid"] = 99
            elif field == "dataset":
                kwargs["dataset"] = "OTHER/LLN0$Goose"
            elif field == "goid":
                kwargs["goid"] = "TAMPERED"
            else:
                kwargs["ethertype"] = 0x88B9
        elif kind < 0.88:          # malformed time text
            kwargs["raw_time"] = "0" + make_timestamp(t).raw_text
        elif kind < 0.94:          # short-fraction time text
            kwargs["raw_time"] = make_timestamp(t).render(3)
            sq += 1
        else:                      # plain repeat (sqnum frozen)
            pass
        msgs.append(g(i, t, stnum=st, sqnum=sq, d1=d1, d2=d2, **kwargs))
    return msgs


def random_sv_sequence(rng: random.Random, length: int,
                       cnt_max: int = 4799) -> List[Message]:
    t = rng.randrange(30_000_000_000, 40_000_000_000)
    cnt = rng.randrange(0, cnt_max + 1)
    msgs: List[Message] = []
    for i in range(length):
        kind = rng.random()
        gap = rng.choice([1, 50, 150, 200, 207, 215, 216, 400, 5_000])
        t += gap
        kwargs = {}
        if kind < 0.55:            # compliant increment
            cnt = (cnt + 1) % (cnt_max + 1)
        elif kind < 0.65:          # counter jump
            cnt = (cnt + rng.randrange(2, 40)) % (cnt_max + 1)
        elif kind < 0.72:          # counter regression
            cnt = max(0, cnt - rng.randrange(1, 10))
        elif kind < 0.78:          # out of range
            cnt = cnt_max + rng.randrange(1, 100)
        elif kind < 0.85:          # identity tamper
            field = rng.choice(["dm", "sm", "appid", "svid", "ethertype"])
            if field == "dm":
                kwargs["dm"] = MacAddress.from_text("01:0C:CD:04:00:FF")
            elif field == "sm":
                kwargs["sm"] = MacAddress.from_text("00:00:00:44:55:66")
            elif field == "appid":
                kwargs["appid"] = 77
            elif field == "svid":
                kwargs["svid"] = "9999"
            else:
                kwargs["ethertype"] = 0x88BB
            cnt = (cnt + 1) % (cnt_max + 1)
        elif kind < 0.92:          # malformed time text
            kwargs["raw_time"] = "0" + make_timestamp(t).raw_text
            cnt = (cnt + 1) % (cnt_max + 1)
        else:                      # frozen counter
            pass
        msgs.append(s(i, t, smpcnt=cnt, **kwargs))
    return msgs
