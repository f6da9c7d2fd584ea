from __future__ import annotations

import asyncio
import io
import logging
import os
import re
import tempfile
from pathlib import Path
from typing import Dict, Iterable, Optional

import aiohttp
import pandas as pd

from utils.errors import DataIOError, ValidationError

logger = logging.getLogger(__name__)

FRED_GRAPH_URL = "https://fred.stlouisfed.org/graph/fredgraph.csv"
_SOURCE_ID = re.compile(r"^[A-Za-z0-9_.\-]+$")


class FetchError(DataIOError):
    """Base exception for remote series retrieval errors."""


class PayloadParseError(DataIOError):
    """Downloaded or cached payload is not a two-column date,value CSV."""


def parse_series_payload(payload: bytes, source_id: str) -> pd.Series:
    try:
        frame = pd.read_csv(io.BytesIO(payload))
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise PayloadParseError(f"{source_id}: unreadable CSV payload ({e})") from e
    if frame.shape[1] != 2 or frame.empty:
        raise PayloadParseError(
            f"{source_id}: expected a two-column date,value payload, got columns {list(frame.columns)}"
        )
    try:
        dates = pd.to_datetime(frame.iloc[:, 0], format="ISO8601")
    except (ValueError, TypeError) as e:
        raise PayloadParseError(f"{source_id}: unparseable dates ({e})") from e
    # FRED marks missing observations with '.'
    values = pd.to_numeric(frame.iloc[:, 1], errors="coerce")
    series = pd.Series(values.to_numpy(dtype=float), index=pd.DatetimeIndex(dates), name=source_id)
    return series.sort_index()


class SeriesFetcher:
    """
    HTTPS client for two-column CSV series with an on-disk cache. Cached
    payloads are served without touching the network; downloads are written
    to a temporary file and renamed into place.
    """

    def __init__(self, cache_dir: Path, base_url: str = FRED_GRAPH_URL, timeout: float = 60.0):
        self.cache_dir = Path(cache_dir)
        self.base_url = base_url
        self.timeout = aiohttp.ClientTimeout(total=timeout)
        self.session: Optional[aiohttp.ClientSession] = None

    async def __aenter__(self) -> SeriesFetcher:
        self.session = aiohttp.ClientSession(timeout=self.timeout)
        return self

    async def __aexit__(self, exc_type, exc, tb):
        if self.session:
            await self.session.close()

    def cache_path(self, source_id: str, start: Optional[str] = None, end: Optional[str] = None) -> Path:
        if not _SOURCE_ID.match(source_id):
            raise ValidationError(f"invalid source id '{source_id}'")
        if start is None and end is None:
            return self.cache_dir / f"{source_id}.csv"
        return self.cache_dir / f"{source_id}_{start or 'begin'}_{end or 'end'}.csv"

    async def _make_request(self, params: Dict[str, str]) -> bytes:
        if not self.session:
            raise FetchError("Session not initialized. Use 'async with' to create a session.")
        try:
            async with self.session.get(self.base_url, params=params) as response:
                if response.status == 200:
                    return await response.read()
                raise FetchError(
                    f"request for {params.get('id')} failed: {response.status} - {await response.text()}"
                )
        except (aiohttp.ClientError, asyncio.TimeoutError) as e:
            raise FetchError(f"request for {params.get('id')} failed: {e!r}") from e

    def _store(self, path: Path, payload: bytes) -> None:
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        fd, tmp_name = tempfile.mkstemp(dir=self.cache_dir, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp_name, path)
        except OSError as e:
            Path(tmp_name).unlink(missing_ok=True)
            raise DataIOError(f"could not write cache file {path}: {e}") from e

    async def fetch_payload(
        self, source_id: str, start: Optional[str] = None, end: Optional[str] = None
    ) -> bytes:
        path = self.cache_path(source_id, start, end)
        if path.exists():
            logger.info(f"Cache hit for {source_id}: {path}")
            return path.read_bytes()

        params = {"id": source_id}
        if start:
            params["cosd"] = start
        if end:
            params["coed"] = end
        logger.info(f"Downloading {source_id} from {self.base_url}")
        payload = await self._make_request(params)
        parse_series_payload(payload, source_id)
        self._store(path, payload)
        return payload

    async def fetch(
        self, source_id: str, start: Optional[str] = None, end: Optional[str] = None
    ) -> pd.Series:
        return parse_series_payload(await self.fetch_payload(source_id, start, end), source_id)

    async def fetch_many(
        self, source_ids: Iterable[str], start: Optional[str] = None, end: Optional[str] = None
    ) -> Dict[str, pd.Series]:
        source_ids = list(source_ids)
        results = await asyncio.gather(*(self.fetch(sid, start, end) for sid in source_ids))
        return dict(zip(source_ids, results))


async def fetch_remote_series(
    source_id: str,
    cache_dir: Path,
    start: Optional[str] = None,
    end: Optional[str] = None,
    base_url: str = FRED_GRAPH_URL,
) -> pd.Series:
    async with SeriesFetcher(cache_dir, base_url=base_url) as fetcher:
        return await fetcher.fetch(source_id, start, end)
