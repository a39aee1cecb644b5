'''
@date:    19/10/2026
@brief:   Output channels for PyUADRL.

Printer functionality controls where progress lines, warnings and
run logs of trainers, runners and monitors end up. Components never
call print directly; they hold a Printer and call Printer.prints .
'''

from abc import ABCMeta, abstractmethod


class Printer(object, metaclass=ABCMeta):
    '''
    A generic printer knows where to redirect text for print.
    Use Printer.prints(output) to print the output instead of
    using the standard keyword

    >>> print (output)

    in order to gain flexibility in redirecting output centrally,
    e.g. to a run log next to the experiment artifacts or into a
    list for inspection in unit tests.
    '''

    @abstractmethod
    def prints(self, output):
        '''
        Direct the output to the internally defined printing stream.
        '''
        pass


class ConsolePrinter(Printer):
    '''
    Redirects to console, equivalent to the print statement

    >>> print (output)
    '''
    def prints(self, output):
        print (output)


class SilentPrinter(Printer):
    '''
    Mutes output. Used by the unit tests and by nested training runs
    (e.g. the random walker reference) that should not clutter the
    console.
    '''
    def prints(self, output):
        pass


class AccumulatorPrinter(Printer):
    '''
    Accumulates all calls to prints in a list 'log'.
    '''
    def __init__(self, *args, **kwargs):
        self.log = []

    def prints(self, output):
        self.log.append(output)


class FilePrinter(Printer):
    '''
    Appends every output line to a text file. The file is opened and
    closed on each call so that the log survives a crash of the run.
    No timestamps are added: two runs with the same configuration
    produce identical log files.
    '''
    def __init__(self, filename, mode='w'):
        self.filename = filename
        # truncate (or create) once, afterwards always append
        with open(self.filename, mode) as f:
            pass

    def prints(self, output):
        with open(self.filename, 'a') as f:
            f.write(str(output) + '\n')


class TeePrinter(Printer):
    '''
    Forwards every output to all given printers, e.g. console and
    run log at the same time.
    '''
    def __init__(self, *printers):
        self.printers = list(printers)

    def prints(self, output):
        for printer in self.printers:
            printer.prints(output)
