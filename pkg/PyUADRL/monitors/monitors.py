"""
@date 19/10/2026
@brief Monitors storing training traces (exploration rate, learning
       rate, quantile loss, replay occupancy, ...) to an HDF5 file.
"""

import h5py as hp
import numpy as np
from abc import ABCMeta, abstractmethod

from PyUADRL.general.element import Printing


class Monitor(Printing, metaclass=ABCMeta):
    """ Abstract base class for monitors. A monitor requests scalar
    quantities from a learner and stores them in an HDF5 file. """

    @abstractmethod
    def dump(self, learner):
        """ Write the quantities given by learner (e.g. a Trainer) to
        buffer and/or file at the time the method is called. """
        pass


class TrainingMonitor(Monitor):
    """ Store per-step training quantities in the group 'Training' of a
    HDF5 file. A buffer (shift register) collects the values and is
    written to file only every write_buffer_every steps; the file is
    opened and closed for each write so that a crash loses at most the
    buffer contents. """

    def __init__(self, filename, n_steps, parameters_dict=None,
                 write_buffer_every=512, buffer_size=4096,
                 *args, **kwargs):
        """
          filename:           Path and name of HDF5 file without file
                              extension.
          n_steps:            Number of entries to reserve for each of
                              the quantities in self.stats_to_store.
          parameters_dict:    Metadata (e.g. the TrainConfig) written as
                              attributes of the file.
          write_buffer_every: Number of steps after which the buffer is
                              written to file.
          buffer_size:        Number of steps to be buffered.

          Optionally pass a list stats_to_store naming the attributes
          or methods of the learner to call/store.
        """
        stats_to_store = ['step', 'epsilon', 'learning_rate', 'td_loss',
                          'buffer_size']
        self.stats_to_store = kwargs.pop('stats_to_store', stats_to_store)
        self.filename = filename
        self.n_steps = n_steps
        self.i_steps = 0

        self._create_file_structure(parameters_dict)

        self.buffer_size = buffer_size
        self.write_buffer_every = write_buffer_every
        self.buffer = {stats: np.zeros(self.buffer_size)
                       for stats in self.stats_to_store}

    def dump(self, learner):
        """ Read the quantities from learner into the buffer, flush the
        buffer every self.write_buffer_every steps and at the last
        step. Calls beyond n_steps are ignored with a warning. """
        if self.i_steps >= self.n_steps:
            self.warns('Training monitor is full, dump ignored.')
            return
        self._write_data_to_buffer(learner)
        if ((self.i_steps + 1) % self.write_buffer_every == 0 or
                (self.i_steps + 1) == self.n_steps):
            self._write_buffer_to_file()

        self.i_steps += 1

    def close(self):
        """ Flush whatever is left in the buffer. """
        if self.i_steps > 0 and self.i_steps % self.write_buffer_every:
            self.i_steps -= 1
            self._write_buffer_to_file()
            self.i_steps += 1

    def _create_file_structure(self, parameters_dict):
        try:
            h5file = hp.File(self.filename + '.h5', 'w')
            if parameters_dict:
                for key in parameters_dict:
                    h5file.attrs[key] = parameters_dict[key]

            h5group = h5file.create_group('Training')
            for stats in sorted(self.stats_to_store):
                h5group.create_dataset(stats, shape=(self.n_steps,),
                                       compression='gzip', compression_opts=9,
                                       track_times=False)
            h5file.close()
        except Exception as err:
            self.warns('Problem occurred during training monitor creation.')
            self.warns(str(err))
            raise

    def _write_data_to_buffer(self, learner):
        """ The buffer is a shift register indexed by step modulo
        buffer_size. Quantities may be methods or plain attributes. """
        write_pos = self.i_steps % self.buffer_size
        for stats in self.stats_to_store:
            value = getattr(learner, stats)
            if callable(value):
                value = value()
            self.buffer[stats][write_pos] = np.nan if value is None else value

    def _write_buffer_to_file(self):
        shift = -((self.i_steps + 1) % self.buffer_size)
        buffer_tmp = {stats: np.roll(self.buffer[stats], shift=shift, axis=0)
                      for stats in self.stats_to_store}
        n_entries_in_buffer = min(self.i_steps + 1, self.buffer_size)
        low_pos_in_buffer = self.buffer_size - n_entries_in_buffer
        low_pos_in_file = self.i_steps + 1 - n_entries_in_buffer
        up_pos_in_file = self.i_steps + 1

        # If the file is unavailable, skip and retry at the next flush.
        # As long as buffer_size is not exceeded no data are lost.
        try:
            h5file = hp.File(self.filename + '.h5', 'a')
            h5group = h5file['Training']
            for stats in self.stats_to_store:
                h5group[stats][low_pos_in_file:up_pos_in_file] = \
                    buffer_tmp[stats][low_pos_in_buffer:]
            h5file.close()
        except IOError:
            self.warns('Training monitor file is temporarily unavailable.')
