"""
Threads that run independent per-band jobs, returning results in job order
"""

from queue import Empty, Queue
from threading import Thread
from typing import Any, Callable, Iterable, Optional

from subsurface_twin.errors import ConfigurationError


class BandWorkerThread(Thread):
    """
    Threaded class draining the job queue of a pool

    ...

    Attributes
    ----------

    _jobs: Queue[tuple[int, Callable[[], Any]]]
        The indexed jobs shared by every worker

    _results: list
        The result slots, one per job

    _errors: list
        The exception raised by each job, None when it succeeded

    """
    def __init__(self, jobs: Queue, results: list, errors: list):
        self._jobs = jobs
        """ The indexed jobs shared by every worker """
        self._results = results
        """ The result slots, one per job """
        self._errors = errors
        """ The exception raised by each job """
        Thread.__init__(self, daemon=True)

    def run(self) -> None:
        while True:
            try:
                index, job = self._jobs.get_nowait()
            except Empty:
                return
            try:
                self._results[index] = job()
            except Exception as error:
                self._errors[index] = error
            finally:
                self._jobs.task_done()


class BandWorkerPool:
    """
    A fixed number of worker threads; one thread runs every job inline

    numpy releases the GIL in its heavy kernels so band jobs overlap

    ...

    Methods
    -------

    map(function, items)
        Applies the function to every item, results ordered like the items

    """
    def __init__(self, n_threads: int = 1):
        if n_threads < 1:
            raise ConfigurationError(f"need at least one thread, got {n_threads}")
        self.n_threads = n_threads
        """ The maximum number of worker threads """

    def map(self, function: Callable[[Any], Any], items: Iterable[Any]) -> list:
        """
        :param function: The job body
        :param items: One argument per job
        :return: The results, in item order regardless of scheduling
        """
        items = list(items)

        if self.n_threads == 1 or len(items) <= 1:
            return [function(item) for item in items]

        jobs: Queue = Queue()
        for index, item in enumerate(items):
            jobs.put((index, lambda item=item: function(item)))

        results: list = [None] * len(items)
        errors: list[Optional[BaseException]] = [None] * len(items)

        workers = [BandWorkerThread(jobs, results, errors)
                   for _ in range(min(self.n_threads, len(items)))]
        for worker in workers:
            worker.start()
        for worker in workers:
            worker.join()

        # The first failing job in item order wins
        for error in errors:
            if error is not None:
                raise error

        return results
