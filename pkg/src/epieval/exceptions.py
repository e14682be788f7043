"""Exception hierarchy shared across the package."""


class EpiEvalError(Exception):
    """Base class for every error raised by epieval."""


# curve validation and alignment
class CurveError(EpiEvalError, ValueError):
    pass


class NonContiguousWeeks(CurveError):
    pass


class NegativeCount(CurveError):
    pass


class TooShort(CurveError):
    pass


class InvalidForecast(CurveError):
    pass


class EmptyOverlap(CurveError):
    pass


# features
class FeatureError(EpiEvalError, ValueError):
    pass


class EmptySeries(FeatureError):
    pass


class SeriesTooShort(FeatureError):
    pass


class DegeneratePeakAtStart(FeatureError):
    pass


class ZeroPopulation(FeatureError):
    pass


class MissingGroupPopulation(FeatureError):
    pass


class ZeroContacts(FeatureError):
    pass


class MissingDenominator(FeatureError):
    pass


class NoNonInfluenzaWeeks(FeatureError):
    pass


class FeatureAbsent(FeatureError):
    pass


# measures
class MeasureError(EpiEvalError, ValueError):
    pass


class DivisionByZero(MeasureError, ZeroDivisionError):
    pass


class LengthMismatch(MeasureError):
    pass


class MissingRun(MeasureError):
    def __init__(self, missing):
        self.missing = tuple(sorted(missing))
        super().__init__(f"no forecast run for prediction times {list(self.missing)}")


# ranking
class RankingError(EpiEvalError, ValueError):
    pass


class NonFiniteValue(RankingError):
    pass


class EmptyMatrix(RankingError):
    pass


class NoCommonPredictionTimes(RankingError):
    pass


class NegativeMape(RankingError):
    pass


# stochastic
class StochasticError(EpiEvalError, ValueError):
    pass


class InvalidSpec(StochasticError):
    pass


class ZeroRwError(StochasticError):
    pass


class ZeroRwCumulative(StochasticError):
    pass


class ClosedFormUnavailable(StochasticError):
    pass


class ZeroDenominator(StochasticError):
    pass


class DegenerateGeometricMeanWarning(UserWarning):
    """A geometric mean collapsed to zero because one relative error was zero."""


# harness
class InvalidConfig(EpiEvalError, ValueError):
    pass


class InvalidRange(EpiEvalError, ValueError):
    pass


# ingestion / cli
class ParseError(EpiEvalError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class MixedForecastKinds(ParseError):
    pass


class ConfigError(EpiEvalError, ValueError):
    pass
