import asyncio
import concurrent.futures
import logging
import os
from typing import Callable, Iterable, List, Optional

from tqdm import tqdm

LOGGER = logging.getLogger(__name__)

THREADS_ENV_VAR = 'QRESET_THREADS'


def thread_count(threads: Optional[int] = None) -> int:
    """
    Number of worker threads: explicit value, else `QRESET_THREADS`, else the CPU count.

    >>> thread_count(3)
    3
    """
    if threads is not None:
        return max(1, int(threads))
    value = os.environ.get(THREADS_ENV_VAR)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            LOGGER.warning(f'Ignoring invalid `{THREADS_ENV_VAR}={value}`')
    return os.cpu_count() or 1


def progress_bar(data, use_tqdm=True, smoothing=0.0, **kwargs):
    if not use_tqdm:
        return data
    kwargs['smoothing'] = smoothing
    return tqdm(data, **kwargs)


def parallel_map(
    fun: Callable,
    iterable: Iterable,
    threads: Optional[int] = None,
    use_tqdm: bool = False,
    desc: str = 'Running tasks in parallel.',
    total: Optional[int] = None,
    chunksize: int = 1000,
) -> List:
    """
    Map function to iterable in multiple threads.

    Args:
        fun: function to apply
        iterable:
        threads: number of threads, see `thread_count`
        use_tqdm: show progressbar
        desc: text of progressbar
        total: size of iterable to allow show better progressbar
        chunksize: number of futures scheduled at once

    Returns:
        list: of returned values by fun, in the order of iterable

    >>> parallel_map(lambda x: x * x, range(5), threads=2)
    [0, 1, 4, 9, 16]
    """
    if total is None and hasattr(iterable, '__len__'):
        total = len(iterable)
    threads = thread_count(threads)
    if threads == 1:
        return [fun(v) for v in progress_bar(iterable, use_tqdm=use_tqdm, desc=desc, total=total)]

    def _fun(i, arg):
        return i, fun(arg)

    pbar = tqdm(desc=desc, total=total, maxinterval=2) if use_tqdm else None

    async def _run(chunk, offset):
        loop = asyncio.get_running_loop()
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
            futures = [loop.run_in_executor(executor, _fun, offset + i, value) for i, value in enumerate(chunk)]
            result = []
            for output_value in asyncio.as_completed(futures):
                result.append(await output_value)
                if pbar is not None:
                    pbar.update()
            return result

    result = []
    offset = 0
    for chunk in chunked(iterable, chunksize=chunksize):
        result.extend(asyncio.run(_run(chunk, offset)))
        offset += len(chunk)
    if pbar is not None:
        pbar.close()
    return [res for _, res in sorted(result, key=lambda ires: ires[0])]


def chunked(iterable, chunksize):
    """
    >>> list(chunked(range(5), 2))
    [[0, 1], [2, 3], [4]]
    """
    result = []
    for val in iterable:
        result.append(val)
        if len(result) == chunksize:
            yield result
            result = []
    if result:
        yield result
