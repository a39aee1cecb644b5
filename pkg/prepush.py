#!/usr/bin/python
# pre-push hook: pushes to master or develop need a green testsuite.
# Install with
#     ln -s ../../prepush.py .git/hooks/pre-push

import subprocess as sbp
import sys

PROTECTED = ('master', 'develop')
BANNER = 'X' * 66


def git(*args):
    return sbp.check_output(('git',) + args).rstrip().decode('utf-8')


def test_all():
    '''Run the PyUADRL testsuite, return its exit status (0: passed).
    The slow replication runs stay skipped unless PYUADRL_SLOW_TESTS=1
    is set in the environment of the push.'''
    testsuite = git('rev-parse', '--show-toplevel') + \
        '/PyUADRL/testing/unittests/testsuite.py'
    return sbp.call([sys.executable, testsuite])


def announce(message):
    print('\n' + BANNER)
    print(message)
    print(BANNER + '\n')


def run():
    '''Return True if the push may proceed.'''
    branch = git('rev-parse', '--abbrev-ref', 'HEAD')
    if branch not in PROTECTED:
        return True
    announce('Pushing to {}: running the unit tests first...'.format(branch))
    if test_all() == 0:
        announce('Unit tests passed, pushing.')
        return True
    announce('Unit tests failed, fix them before pushing. Aborting.')
    return False


if __name__ == '__main__':
    sys.exit(0 if run() else 1)
