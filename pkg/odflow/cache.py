# -*- encoding: utf-8 -*-
# This code comes form the Stuvel's "flickrapi" project.

#Copyright (c) 2007 by the respective coders, see
#http://www.stuvel.eu/projects/flickrapi

#This code is subject to the Python licence, as can be read on
#http://www.python.org/download/releases/2.5.2/license/

#For those without an internet connection, here is a summary. When this
#summary clashes with the Python licence, the latter will be applied.

#Permission is hereby granted, free of charge, to any person obtaining
#a copy of this software and associated documentation files (the
#"Software"), to deal in the Software without restriction, including
#without limitation the rights to use, copy, modify, merge, publish,
#distribute, sublicense, and/or sell copies of the Software, and to
#permit persons to whom the Software is furnished to do so, subject to
#the following conditions:

#The above copyright notice and this permission notice shall be
#included in all copies or substantial portions of the Software.

#THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND,
#EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF
#MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT.
#IN NO EVENT SHALL THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY
#CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION OF CONTRACT,
#TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE
#SOFTWARE OR THE USE OR OTHER DEALINGS IN THE SOFTWARE.
#
''' In-process memo for immutable results.

The interface follows the low-level cache API of the Django framework
(get/set/delete, bounded size with culling) so any compliant object can be
plugged in instead through `odflow.network.enable_cache`.
'''

import threading
import time


class SimpleCache(object):
    '''Bounded thread-safe cache.

    This stores at most 64 entries which never expire:
    >>> cache = SimpleCache(timeout=None, max_entries=64)
    '''

    def __init__(self, timeout=None, max_entries=64):
        self.storage = {}
        self.expire_info = {}
        self.lock = threading.RLock()
        self.default_timeout = timeout
        self.max_entries = max_entries
        self.cull_frequency = 3
        self.hits = 0
        self.misses = 0

    def locking(method):
        '''Method decorator, ensures the method call is locked'''

        def locked(self, *args, **kwargs):
            with self.lock:
                return method(self, *args, **kwargs)

        return locked

    @locking
    def get(self, key, default=None):
        '''Fetch a given key from the cache. If the key does not exist, or
        has expired, return default.
        '''
        if key not in self.storage:
            self.misses += 1
            return default
        exp = self.expire_info.get(key)
        if exp is not None and exp < time.time():
            self.delete(key)
            self.misses += 1
            return default
        self.hits += 1
        return self.storage[key]

    @locking
    def set(self, key, value, timeout=None):
        '''Store a value. A timeout of None (the default when the cache was
        built without one) keeps the entry until it is culled.
        '''
        if key not in self.storage and len(self.storage) >= self.max_entries:
            self.cull()
        if timeout is None:
            timeout = self.default_timeout
        self.storage[key] = value
        if timeout is None:
            self.expire_info.pop(key, None)
        else:
            self.expire_info[key] = time.time() + timeout

    @locking
    def delete(self, key):
        '''Deletes a key from the cache, failing silently if it doesn't exist.
        '''
        self.storage.pop(key, None)
        self.expire_info.pop(key, None)

    @locking
    def clear(self):
        self.storage.clear()
        self.expire_info.clear()

    @locking
    def __contains__(self, key):
        '''Returns True if the key is in the cache and has not expired.'''
        sentinel = object()
        return self.get(key, sentinel) is not sentinel

    @locking
    def cull(self):
        '''Drops every cull_frequency-th entry, oldest first'''
        doomed = [k for (i, k) in enumerate(self.storage)
                  if i % self.cull_frequency == 0]
        for k in doomed:
            self.delete(k)

    @locking
    def __len__(self):
        return len(self.storage)
