'''
@date:    19/10/2026

Provide useful decorators for PyUADRL.
'''

from functools import wraps


def check_state_action(n_states_of, n_actions_of=None, with_action=True):
    '''Validate the (state[, action]) positional arguments following
    the first argument of the decorated function.

    Arguments:
        - n_states_of: callable returning the number of states of the
          first argument (an MDP, an ensemble, a buffer, ...)
        - n_actions_of: callable returning the number of actions of
          the first argument (only needed if with_action)
        - with_action: whether the decorated function takes an action
          index after the state index

    Raises IndexOutOfRange (an IndexError) for invalid indices.
    '''
    def check_decorator(func):
        @wraps(func)
        def checked(obj, state, *args, **kwargs):
            # local import: mdp_core itself uses this decorator
            from PyUADRL.mdp.mdp_core import IndexOutOfRange
            n_states = n_states_of(obj)
            if not 0 <= int(state) < n_states:
                raise IndexOutOfRange(
                    '{:s}: state {} not in [0, {})'.format(
                        func.__name__, state, n_states))
            if with_action:
                action = args[0] if args else kwargs.get('action')
                n_actions = n_actions_of(obj)
                if action is None or not 0 <= int(action) < n_actions:
                    raise IndexOutOfRange(
                        '{:s}: action {} not in [0, {})'.format(
                            func.__name__, action, n_actions))
            return func(obj, state, *args, **kwargs)
        return checked
    return check_decorator


def memoize(function):
    '''Memoizes the output of a function for given arguments (no keyword
    arguments) and returns the correspondingly saved value after the
    first evaluation.
    '''
    store = {}

    @wraps(function)
    def evaluate(*args):
        if args not in store:
            store[args] = function(*args)
        return store[args]
    return evaluate
