"""Session-level score smoothing: a rolling mean per session, with entity
creations forced to a sentinel far below the regular score range.

Creation revisions open their session, so after averaging every later
revision of that session also lands below zero, which ranks the whole
session beneath any regular score. Consumers must not clamp the output.
"""

from collections import OrderedDict

CREATION_SENTINEL = -1000.0
DEFAULT_CREATION_ACTIONS = frozenset({("wbeditentity", "create")})
DEFAULT_MAX_SESSIONS = 100_000


class SessionScorer:
    """Per-session running mean over raw-or-sentinel values.

    Sessions are kept in an LRU map capped at `max_sessions`; an evicted
    session restarts its mean if it ever reappears.
    """

    def __init__(self, creation_actions=DEFAULT_CREATION_ACTIONS,
                 max_sessions=DEFAULT_MAX_SESSIONS):
        self.creation_actions = frozenset(creation_actions)
        self.max_sessions = max_sessions
        self._sessions = OrderedDict()  # session_id -> [running_sum, count]

    def is_creation(self, pc) -> bool:
        return pc is not None and (pc.action, pc.subaction) in self.creation_actions

    def raw_or_sentinel(self, pc, raw_score: float) -> float:
        return CREATION_SENTINEL if self.is_creation(pc) else raw_score

    def adjust(self, session_id, value: float) -> float:
        """Absorb one value; return the session mean so far. A missing
        session id makes the revision its own session (identity)."""
        if session_id is None:
            return value
        state = self._sessions.get(session_id)
        if state is None:
            state = [0.0, 0]
            self._sessions[session_id] = state
            if len(self._sessions) > self.max_sessions:
                self._sessions.popitem(last=False)
        else:
            self._sessions.move_to_end(session_id)
        state[0] += value
        state[1] += 1
        return state[0] / state[1]

    def score(self, pc, session_id, raw_score: float) -> float:
        return self.adjust(session_id, self.raw_or_sentinel(pc, raw_score))

    def reset(self):
        self._sessions.clear()
