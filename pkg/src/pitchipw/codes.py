"""Pitch and plate-appearance outcome codes.

The enum is seeded with the 25 outcome categories of the run-value table;
``EventCode.parse`` accepts either the value or the member name so exports
that spell codes differently ("HOME_RUN", "home run") still load.
"""

from __future__ import annotations

from enum import Enum


class EventCode(str, Enum):
    STRIKE = "strike"
    BALL = "ball"
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    HOME_RUN = "home_run"
    FIELD_OUT = "field_out"
    DOUBLE_PLAY = "double_play"
    FOUL_FLY = "foul_fly"
    SWINGING_STRIKEOUT = "swinging_strikeout"
    CALLED_STRIKEOUT = "called_strikeout"
    UNCAUGHT_THIRD_STRIKE = "uncaught_third_strike"
    WALK = "walk"
    HIT_BY_PITCH = "hit_by_pitch"
    INTENTIONAL_WALK = "intentional_walk"
    BUNT = "bunt"
    BUNT_ERROR = "bunt_error"
    BUNT_STRIKEOUT = "bunt_strikeout"
    BUNT_FIELDERS_CHOICE = "bunt_fielders_choice"
    SACRIFICE_FLY = "sacrifice_fly"
    SACRIFICE_FLY_ERROR = "sacrifice_fly_error"
    ERROR = "error"
    FIELDING_INTERFERENCE = "fielding_interference"
    BATTING_INTERFERENCE = "batting_interference"
    FOUL_LINER = "foul_liner"

    @classmethod
    def parse(cls, text: str) -> "EventCode":
        key = text.strip().lower().replace(" ", "_").replace("-", "_").replace("'", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown event code {text!r}") from None


NON_TERMINAL = frozenset({EventCode.STRIKE, EventCode.BALL})

# Outs recorded on the play; codes absent here record none.
OUTS_ON_PLAY = {
    EventCode.FIELD_OUT: 1,
    EventCode.DOUBLE_PLAY: 2,
    EventCode.FOUL_FLY: 1,
    EventCode.SWINGING_STRIKEOUT: 1,
    EventCode.CALLED_STRIKEOUT: 1,
    EventCode.BUNT: 1,
    EventCode.BUNT_STRIKEOUT: 1,
    EventCode.SACRIFICE_FLY: 1,
    EventCode.BATTING_INTERFERENCE: 1,
    EventCode.FOUL_LINER: 1,
}


def is_terminal(code: EventCode) -> bool:
    """True when the pitch ends the plate appearance."""
    return code not in NON_TERMINAL


def outs_on_play(code: EventCode) -> int:
    return OUTS_ON_PLAY.get(code, 0)
