# -*- coding: utf-8 -*-

class EpifcError(Exception):
  pass

class LengthError(EpifcError, ValueError):
  pass

class RangeError(EpifcError, ValueError):
  pass

class ParseError(EpifcError, ValueError):
  def __init__(self, messg, row=None, column=None):
    if row is not None or column is not None:
      messg = '{} (row={} column={})'.format(messg, row, column)
    super(ParseError, self).__init__(messg)
    self.row = row
    self.column = column

class CoverageError(EpifcError, ValueError):
  pass

class UnknownStateError(EpifcError, KeyError):
  def __str__(self): ### KeyError quotes its message otherwise
    return str(self.args[0]) if self.args else ''

class SingularityError(EpifcError, ArithmeticError):
  pass

class DegenerateError(EpifcError, ValueError):
  pass

class FitError(EpifcError, RuntimeError):
  pass

class NotTrainedError(EpifcError, RuntimeError):
  pass

class EmptyResultError(EpifcError, RuntimeError):
  pass

class SweepError(EpifcError, ValueError):
  pass

class MissingBaselineError(EpifcError, LookupError):
  pass
