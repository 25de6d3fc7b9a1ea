"""
Session log files

Canonical format: UTF-8 TSV, one session per line,
``user_id <TAB> item_1,...,item_K <TAB> c_1,...,c_K`` with c in {0, 1}.

The Yandex personalized web search challenge logs use three record types
(tab separated):

- ``SessionID  M  Day  USERID`` opens a session
- ``SessionID  TimePassed  Q|T  SERPID  QueryID  ListOfTerms  URL,Domain ...``
  shows a result page
- ``SessionID  TimePassed  C  SERPID  URLID`` records a click

``read_yandex_log`` turns each result page into one SessionRecord of its
first K results.
"""

from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union

from ..core.exceptions import InvalidArgumentError
from ..utils.logger import get_logger
from .models import SessionRecord

logger = get_logger(__name__)


def parse_session_line(line: str, line_number: int = 0) -> SessionRecord:
    """Parse one canonical TSV line."""
    parts = line.rstrip("\r\n").split("\t")
    if len(parts) != 3:
        raise InvalidArgumentError(f"line {line_number}: expected 3 tab-separated fields, got {len(parts)}")
    user_id, items, clicks = parts
    try:
        return SessionRecord(
            user_id=user_id,
            displayed=items.split(","),
            clicks=[int(c) for c in clicks.split(",")],
        )
    except ValueError as e:
        raise InvalidArgumentError(f"line {line_number}: {e}") from e


def read_sessions(path: Union[str, Path]) -> List[SessionRecord]:
    """
    Read a canonical session log

    Args:
        path: TSV file

    Returns:
        Sessions in file order; blank lines are skipped
    """
    sessions = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if line.strip():
                sessions.append(parse_session_line(line, number))
    logger.info(f"Read {len(sessions)} sessions from {path}")
    return sessions


def format_session(session: SessionRecord) -> str:
    return "\t".join(
        [
            session.user_id,
            ",".join(session.displayed),
            ",".join(str(c) for c in session.clicks),
        ]
    )


def write_sessions(sessions: Iterable[SessionRecord], path: Union[str, Path]) -> int:
    """Write sessions in the canonical format and return how many were written."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for session in sessions:
            f.write(format_session(session) + "\n")
            count += 1
    logger.info(f"Wrote {count} sessions to {path}")
    return count


def read_yandex_log(
    lines: Iterable[str], K: int = 10, query_ids: Optional[Set[str]] = None
) -> Iterator[SessionRecord]:
    """
    Convert Yandex challenge log lines into sessions

    Args:
        lines: Raw log lines
        K: Number of leading results kept per page
        query_ids: Keep only pages answering these queries; all when None

    Yields:
        One SessionRecord per result page, in log order
    """
    users: Dict[str, str] = {}
    pages: Dict[Tuple[str, str], Tuple[str, List[str], List[int]]] = {}
    order: List[Tuple[str, str]] = []
    current_session: Optional[str] = None

    def flush() -> Iterator[SessionRecord]:
        for key in order:
            user, urls, clicks = pages[key]
            yield SessionRecord(user_id=user, displayed=urls, clicks=clicks)
        pages.clear()
        order.clear()

    for number, line in enumerate(lines, start=1):
        fields = line.rstrip("\r\n").split("\t")
        if len(fields) < 3:
            continue
        session_id = fields[0]
        if session_id != current_session:
            yield from flush()
            current_session = session_id
        if fields[1] == "M":
            users[session_id] = fields[3] if len(fields) > 3 else session_id
        elif fields[2] in ("Q", "T") and len(fields) >= 7:
            serp, query = fields[3], fields[4]
            if query_ids is not None and query not in query_ids:
                continue
            urls = [pair.split(",")[0] for pair in fields[6:]][:K]
            # duplicated urls on one page cannot be told apart
            if len(set(urls)) != len(urls):
                logger.debug(f"line {number}: duplicated result urls, page skipped")
                continue
            key = (session_id, serp)
            if key not in pages:
                order.append(key)
            pages[key] = (users.get(session_id, session_id), urls, [0] * len(urls))
        elif fields[2] == "C" and len(fields) >= 5:
            key = (session_id, fields[3])
            if key in pages:
                _, urls, clicks = pages[key]
                if fields[4] in urls:
                    clicks[urls.index(fields[4])] = 1
    yield from flush()
