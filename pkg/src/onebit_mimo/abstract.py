import abc

import pandas as pd


class AbstractReport(abc.ABC):
    """
    Abstract class for computed results with a tabular view.
    """

    @property
    @abc.abstractmethod
    def df(self) -> pd.DataFrame:
        """
        A dataframe of the result.
        """
