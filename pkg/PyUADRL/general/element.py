'''
@date:    19/10/2026

Provide the Printing mixin used by all PyUADRL components that
communicate with the user, and the abstract Learner contract shared by
the quantile-regression trainers.
'''

from abc import ABCMeta, abstractmethod

from PyUADRL.general.printers import ConsolePrinter


class Printing(object):
    '''Provides prints(output) and warns(output) methods in order to
    communicate any output to the user. Use for instance

    >>> self.prints("Step 1000: epsilon 0.52")

    instead of

    >>> print ("Step 1000: epsilon 0.52")

    in order to obtain full flexibility over output channels.
    '''

    def __init__(self, *args, **kwargs):
        pass

    def __new__(cls, *args, **kwargs):
        '''
        Factory method makes sure that inheriting components always
        have a Printer available for output redirection.
        If an inheriting constructor gets the keyword argument
        'printer', an individual Printer as defined in the
        PyUADRL.general.printers module is attached to this instance
        (same for 'warningprinter'). Standard is console output.
        '''
        instance = object.__new__(cls)
        printer = kwargs.get('printer', None)
        warningprinter = kwargs.get('warningprinter', None)
        instance._printer = printer if printer is not None else ConsolePrinter()
        instance._warningprinter = (warningprinter
                                    if warningprinter is not None
                                    else instance._printer)
        return instance

    def prints(self, output):
        '''
        Communicate any output to the user.
        '''
        self._printer.prints(output)

    def warns(self, output):
        '''
        Communicate warnings to the user. Use for instance

        >>> self.warns("replay buffer is empty, skipping update")
        '''
        self._warningprinter.prints("*** PyUADRL WARNING! " + output)


class Learner(Printing, metaclass=ABCMeta):
    '''
    Abstract learner acting on a replay buffer. Guarantees to fulfil
    its training contract via the method run() which returns the
    trained model.
    '''

    @abstractmethod
    def run(self):
        '''
        Perform the training loop and return the trained model.
        '''
        pass
