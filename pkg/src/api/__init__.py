from .series_fetcher import (
    FRED_GRAPH_URL,
    FetchError,
    PayloadParseError,
    SeriesFetcher,
    fetch_remote_series,
    parse_series_payload,
)
