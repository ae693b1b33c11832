"""Download of ensemble PDB files from the Protein Ensemble Database."""
import json
import logging
import os
import re
import threading
from pathlib import Path
from typing import Dict, Optional, Union

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from utils.errors import EntryNotFoundError, FetchError, InvalidEntryIdError

logger = logging.getLogger(__name__)

DEFAULT_FETCH_BASE_URL = "https://deposition.proteinensemble.org/api/v1/entries"
ENTRY_ID_PATTERN = re.compile(r"^PED\d{5}(e\d{3})?$")
RETRY_STATUSES = (429, 500, 502, 503, 504)
CHUNK_SIZE = 1 << 16

_path_locks: Dict[Path, threading.Lock] = {}
_path_locks_guard = threading.Lock()


def _lock_for(path: Path) -> threading.Lock:
    with _path_locks_guard:
        return _path_locks.setdefault(path.resolve(), threading.Lock())


def validate_entry_id(entry_id: str) -> str:
    if not ENTRY_ID_PATTERN.match(entry_id or ""):
        raise InvalidEntryIdError(f"malformed entry id {entry_id!r}, expected e.g. PED00151 or PED00151e001")
    return entry_id


def build_session(retries: int = 3) -> requests.Session:
    """Session retrying transient failures with exponential backoff."""
    session = requests.Session()
    retry = Retry(
        total=retries,
        backoff_factor=0.5,
        status_forcelist=RETRY_STATUSES,
        allowed_methods=frozenset(["GET"]),
        raise_on_status=False,
    )
    session.mount("https://", HTTPAdapter(max_retries=retry))
    session.mount("http://", HTTPAdapter(max_retries=retry))
    return session


class EnsembleFetcher:
    """
    Fetch client with an on-disk cache.

    A sidecar <file>.meta.json stores the downloaded size; a later call whose
    file still has that size returns without touching the network.
    """

    def __init__(
        self,
        base_url: Optional[str] = None,
        session: Optional[requests.Session] = None,
        retries: int = 3,
        timeout: float = 60.0,
    ):
        self.base_url = (base_url or os.getenv("BACKMAP_FETCH_BASE_URL") or DEFAULT_FETCH_BASE_URL).rstrip("/")
        self.session = session or build_session(retries)
        self.timeout = timeout

    def url_for(self, entry_id: str) -> str:
        return f"{self.base_url}/{entry_id}/download"

    @staticmethod
    def _cached(target: Path, meta_path: Path) -> bool:
        if not target.exists() or not meta_path.exists():
            return False
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return False
        return meta.get("size") == target.stat().st_size

    def fetch(self, entry_id: str, destination: Union[str, Path]) -> Path:
        """
        Download an entry into a directory.

        Args:
            entry_id: PED entry or ensemble id
            destination: Directory receiving <entry_id>.pdb

        Returns:
            Path of the local file
        """
        validate_entry_id(entry_id)
        directory = Path(destination)
        directory.mkdir(parents=True, exist_ok=True)
        target = directory / f"{entry_id}.pdb"
        meta_path = directory / f"{entry_id}.pdb.meta.json"

        with _lock_for(target):
            if self._cached(target, meta_path):
                logger.info("%s already present at %s", entry_id, target)
                return target

            url = self.url_for(entry_id)
            logger.info("downloading %s from %s", entry_id, url)
            try:
                response = self.session.get(url, stream=True, timeout=self.timeout)
            except requests.RequestException as e:
                raise FetchError(f"request for {entry_id} failed: {e}", status=None, retryable=True) from e

            if response.status_code == 404:
                raise EntryNotFoundError(f"entry {entry_id} not found")
            if response.status_code >= 400:
                retryable = response.status_code in RETRY_STATUSES
                raise FetchError(
                    f"download of {entry_id} failed with HTTP {response.status_code}",
                    status=response.status_code,
                    retryable=retryable,
                )

            partial = target.with_suffix(".pdb.part")
            size = 0
            try:
                with open(partial, "wb") as handle:
                    for chunk in response.iter_content(chunk_size=CHUNK_SIZE):
                        if chunk:
                            handle.write(chunk)
                            size += len(chunk)
            except requests.RequestException as e:
                partial.unlink(missing_ok=True)
                raise FetchError(f"download of {entry_id} broke off after {size} bytes: {e}", retryable=True) from e
            except BaseException:
                partial.unlink(missing_ok=True)
                raise
            os.replace(partial, target)
            meta_path.write_text(json.dumps({"entry_id": entry_id, "url": url, "size": size}), encoding="utf-8")
            logger.info("saved %s (%d bytes)", target, size)
            return target


def fetch_entry(
    entry_id: str,
    destination: Union[str, Path],
    base_url: Optional[str] = None,
    session: Optional[requests.Session] = None,
) -> Path:
    """Download one entry; see EnsembleFetcher."""
    return EnsembleFetcher(base_url=base_url, session=session).fetch(entry_id, destination)
