package org.redisson.transaction.operation.set;

import org.redisson.command.CommandAsyncExecutor;

/**
 * 
 * @author Nikita Koksharov
 *
 */
public class MoveOperation extends SetOperation {

    private String destinationName;

    public MoveOperation(String name, String destinationName) {
        this.name = name;
        this.destinationName = destinationName;
    }

    @Override
    public void commit(CommandAsyncExecutor commandExecutor) {
        commandExecutor.move(name, destinationName);
    }

    @Override
    public void rollback(CommandAsyncExecutor commandExecutor) {
        commandExecutor.unlock(destinationName);
    }
}
